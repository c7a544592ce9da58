#include <doctest.h>

#include <cmath>
#include <vector>

#include "sentry/dataset.hpp"
#include "sentry/sampler.hpp"

using namespace sentry;

namespace {

Dataset balanced_set(int classes, int per_class) {
    Dataset ds(Domain::source, Split::train, classes);
    for (int c = 0; c < classes; ++c)
        for (int i = 0; i < per_class; ++i) ds.add({double(c), double(i)}, c);
    return ds;
}

Dataset long_tailed_if20() {
    // counts 200,95,45,21,10: IF = 20
    Dataset ds(Domain::target, Split::train, 5);
    const int counts[5] = {200, 95, 45, 21, 10};
    for (int c = 0; c < 5; ++c)
        for (int i = 0; i < counts[c]; ++i) ds.add({double(c), double(i)}, c);
    return ds;
}

}  // namespace

TEST_CASE("class-balanced batches cycle classes round-robin") {
    auto ds = balanced_set(4, 10);
    SamplerState s(SamplerMode::class_balanced, 123);
    s.build_pools(ds);
    const auto idx = s.next_batch(ds, 8);
    REQUIRE(idx.size() == 8);
    std::vector<int> per_class(4, 0);
    for (auto i : idx) ++per_class[ds.raw_label(i)];
    for (int c = 0; c < 4; ++c) CHECK(per_class[c] == 2);
}

TEST_CASE("per-class counts differ by at most one over several full cycles") {
    auto ds = balanced_set(3, 50);
    SamplerState s(SamplerMode::class_balanced, 7);
    s.build_pools(ds);
    std::vector<int> per_class(3, 0);
    for (int b = 0; b < 10; ++b)
        for (auto i : s.next_batch(ds, 7))  // 7 % 3 != 0 to exercise the carry
            ++per_class[ds.raw_label(i)];
    const int mn = std::min({per_class[0], per_class[1], per_class[2]});
    const int mx = std::max({per_class[0], per_class[1], per_class[2]});
    CHECK(mx - mn <= 1);
}

TEST_CASE("balanced draws on an IF=20 set stay uniform within 3 sigma over 10k samples") {
    auto ds = long_tailed_if20();
    SamplerState s(SamplerMode::class_balanced, 99);
    s.build_pools(ds);
    const int draws = 10000;
    std::vector<int> per_class(5, 0);
    int taken = 0;
    while (taken < draws) {
        for (auto i : s.next_batch(ds, 100)) {
            ++per_class[ds.raw_label(i)];
            ++taken;
        }
    }
    const double p = 1.0 / 5.0;
    const double sigma = std::sqrt(taken * p * (1 - p));
    for (int c = 0; c < 5; ++c) CHECK(std::abs(per_class[c] - taken * p) <= 3 * sigma);
}

TEST_CASE("pseudo-balanced pools mirror the pseudolabel histogram exactly") {
    auto ds = long_tailed_if20();
    // scatter pseudolabels unlike the ground truth
    for (std::size_t i = 0; i < ds.size(); ++i) ds.set_pseudo(i, static_cast<int>(i % 5));
    SamplerState s(SamplerMode::pseudo_balanced, 5);
    s.build_pools(ds);
    const auto hist = ds.pseudo_histogram();
    REQUIRE(s.pools().size() == 5);
    for (int c = 0; c < 5; ++c)
        CHECK(static_cast<std::int64_t>(s.pools()[c].size()) == hist.counts[c]);

    // refresh after flipping everything to class 1
    for (std::size_t i = 0; i < ds.size(); ++i) ds.set_pseudo(i, 1);
    refresh_pseudo_pools(s, ds);
    CHECK(s.pools()[1].size() == ds.size());
    for (int c : {0, 2, 3, 4}) CHECK(s.pools()[c].empty());

    // degenerate pools still fill batches, all from the one populated class
    const auto idx = s.next_batch(ds, 6);
    REQUIRE(idx.size() == 6);
    for (auto i : idx) CHECK(ds.pseudo(i) == 1);
}

TEST_CASE("pseudo pools never read ground-truth labels") {
    auto ds = long_tailed_if20();
    for (std::size_t i = 0; i < ds.size(); ++i) ds.set_pseudo(i, static_cast<int>(i % 5));
    const auto before = ds.train_label_reads();
    SamplerState s(SamplerMode::pseudo_balanced, 6);
    s.build_pools(ds);
    s.next_batch(ds, 32);
    CHECK(ds.train_label_reads() == before);
}

TEST_CASE("class-balanced pools read labels through the audited training path") {
    auto ds = balanced_set(3, 5);
    const auto before = ds.train_label_reads();
    SamplerState s(SamplerMode::class_balanced, 8);
    s.build_pools(ds);
    CHECK(ds.train_label_reads() == before + ds.size());
}

TEST_CASE("all pools empty is an error") {
    Dataset ds(Domain::target, Split::train, 3);
    ds.add({0.0, 0.0}, -1);  // unlabeled, pseudo unset
    SamplerState s(SamplerMode::pseudo_balanced, 9);
    CHECK_THROWS(s.next_batch(ds, 4));
}

TEST_CASE("uniform mode draws i.i.d. and deterministically per seed") {
    auto ds = balanced_set(2, 20);
    SamplerState a(SamplerMode::uniform, 41), b(SamplerMode::uniform, 41);
    a.build_pools(ds);
    b.build_pools(ds);
    CHECK(a.next_batch(ds, 16) == b.next_batch(ds, 16));
}

TEST_CASE("sampler mode names parse and print consistently") {
    CHECK(parse_sampler_mode("class_balanced") == SamplerMode::class_balanced);
    CHECK(parse_sampler_mode("pseudo_balanced") == SamplerMode::pseudo_balanced);
    CHECK(parse_sampler_mode("uniform") == SamplerMode::uniform);
    CHECK_THROWS(parse_sampler_mode("stratified"));
    for (auto m : {SamplerMode::class_balanced, SamplerMode::pseudo_balanced, SamplerMode::uniform})
        CHECK(parse_sampler_mode(sampler_mode_name(m)) == m);
}
