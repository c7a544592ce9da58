// Times the batched gradient / committee kernels against the serial
// reference and checks the two produce bit-identical results.

#include <chrono>
#include <cstring>
#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "sentry/batch_eval.hpp"
#include "sentry/losses.hpp"

using namespace sentry;
using clock_t_ = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    const auto t0 = clock_t_::now();
    for (int r = 0; r < reps; ++r) fn();
    return std::chrono::duration<double, std::milli>(clock_t_::now() - t0).count() / reps;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

int main(int argc, char** argv) {
    int instances = 512, dim = 64, classes = 10, reps = 5, threads = 0;
    std::vector<int> hidden = {128, 64};
    CLI::App app{"kernel benchmark: serial reference vs parallel"};
    app.add_option("--instances", instances, "batch size");
    app.add_option("--dim", dim, "input dimension");
    app.add_option("--classes", classes, "class count");
    app.add_option("--hidden", hidden, "hidden widths");
    app.add_option("--reps", reps, "timing repetitions");
    app.add_option("--threads", threads, "worker count (0 = library default)");
    CLI11_PARSE(app, argc, argv);
    if (threads > 0) set_threads(threads);

    Rng rng(7);
    ClassifierSpec spec;
    spec.input_dim = dim;
    spec.hidden = hidden;
    spec.num_classes = classes;
    Classifier model(spec, rng);

    std::vector<std::vector<double>> xs(instances, std::vector<double>(dim));
    std::vector<int> ys(instances);
    for (auto& x : xs)
        for (auto& v : x) v = rng.gaussian();
    for (auto& y : ys) y = rng.below(classes);

    std::cout << "instances=" << instances << " dim=" << dim << " params="
              << spec.param_count() << " threads=" << max_threads() << "\n\n";

    LossValue g_serial, g_parallel;
    const double ms_s = time_ms([&] { g_serial = loss_ce(model, xs, ys, Exec::serial); }, reps);
    const double ms_p =
        time_ms([&] { g_parallel = loss_ce(model, xs, ys, Exec::parallel); }, reps);
    const bool same = bit_equal(g_serial.grad, g_parallel.grad) &&
                      g_serial.value == g_parallel.value;
    std::cout << "cross-entropy grad   serial " << ms_s << " ms   parallel " << ms_p
              << " ms   speedup " << ms_s / ms_p << "x   bit-identical: "
              << (same ? "yes" : "NO") << "\n";

    CommitteeSetup setup;
    setup.geom = {0, 0};
    std::vector<std::uint64_t> seeds(instances);
    for (auto& s : seeds) s = rng.next_u64();
    CommitteeBatch cb_s, cb_p;
    const double cm_s =
        time_ms([&] { cb_s = committee_eval(model, xs, seeds, setup, Exec::serial); }, reps);
    const double cm_p =
        time_ms([&] { cb_p = committee_eval(model, xs, seeds, setup, Exec::parallel); }, reps);
    bool csame = cb_s.verdicts.size() == cb_p.verdicts.size();
    for (std::size_t i = 0; csame && i < cb_s.verdicts.size(); ++i) {
        csame = cb_s.verdicts[i].clean_pred == cb_p.verdicts[i].clean_pred &&
                cb_s.verdicts[i].matches == cb_p.verdicts[i].matches;
        for (std::size_t m = 0; csame && m < cb_s.members[i].size(); ++m)
            csame = bit_equal(cb_s.members[i][m], cb_p.members[i][m]);
    }
    std::cout << "committee eval       serial " << cm_s << " ms   parallel " << cm_p
              << " ms   speedup " << cm_s / cm_p << "x   bit-identical: "
              << (csame ? "yes" : "NO") << "\n";

    return same && csame ? 0 : 1;
}
