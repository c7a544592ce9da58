#include "sentry/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sentry {

std::int64_t LabelHistogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

double LabelHistogram::imbalance_factor() const {
    if (counts.empty()) throw std::logic_error("imbalance factor of an empty histogram");
    std::int64_t mx = counts[0], mn = counts[0];
    for (std::int64_t c : counts) {
        mx = std::max(mx, c);
        mn = std::min(mn, c);
    }
    if (mn == 0) throw std::logic_error("imbalance factor undefined: a class has zero examples");
    return static_cast<double>(mx) / static_cast<double>(mn);
}

Dataset::Dataset(Domain domain, Split split, int num_classes)
    : domain_(domain), split_(split), num_classes_(num_classes) {
    if (num_classes < 2) throw std::invalid_argument("dataset: need at least 2 classes");
}

void Dataset::add(std::vector<double> x, int label) {
    if (label < -1 || label >= num_classes_)
        throw std::invalid_argument("dataset: label " + std::to_string(label) +
                                    " out of range for " + std::to_string(num_classes_) +
                                    " classes");
    if (!xs_.empty() && x.size() != xs_[0].size())
        throw std::invalid_argument("dataset: inconsistent input dim " + std::to_string(x.size()) +
                                    " vs " + std::to_string(xs_[0].size()));
    xs_.push_back(std::move(x));
    labels_.push_back(label);
    pseudo_.push_back(-1);
}

bool Dataset::has_labels() const {
    for (int l : labels_)
        if (l < 0) return false;
    return !labels_.empty();
}

int Dataset::label(std::size_t i) const {
    ++train_reads_;
    return labels_.at(i);
}

int Dataset::eval_label(std::size_t i) const {
    ++eval_reads_;
    return labels_.at(i);
}

void Dataset::set_pseudo(std::size_t i, int c) {
    if (c < 0 || c >= num_classes_)
        throw std::invalid_argument("dataset: pseudolabel " + std::to_string(c) + " out of range");
    pseudo_.at(i) = c;
}

LabelHistogram Dataset::label_histogram() const {
    LabelHistogram h;
    h.counts.assign(num_classes_, 0);
    for (int l : labels_)
        if (l >= 0) ++h.counts[l];
    return h;
}

LabelHistogram Dataset::pseudo_histogram() const {
    LabelHistogram h;
    h.counts.assign(num_classes_, 0);
    for (int p : pseudo_)
        if (p >= 0) ++h.counts[p];
    return h;
}

namespace {

std::vector<double> class_cdf(const std::vector<double>& probs, int c_count) {
    std::vector<double> p = probs;
    if (p.empty()) p.assign(c_count, 1.0 / c_count);
    if (static_cast<int>(p.size()) != c_count)
        throw std::invalid_argument("label distribution has " + std::to_string(p.size()) +
                                    " entries for " + std::to_string(c_count) + " classes");
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0) throw std::invalid_argument("label distribution has a negative entry");
        sum += v;
    }
    if (sum <= 0.0) throw std::invalid_argument("label distribution sums to zero");
    std::vector<double> cdf(p.size());
    double acc = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
        acc += p[c] / sum;
        cdf[c] = acc;
    }
    cdf.back() = 1.0;
    return cdf;
}

int draw_class(Rng& rng, const std::vector<double>& cdf) {
    const double u = rng.uniform();
    for (std::size_t c = 0; c < cdf.size(); ++c)
        if (u < cdf[c]) return static_cast<int>(c);
    return static_cast<int>(cdf.size()) - 1;
}

const char* split_name(Split s) { return s == Split::train ? "train" : "test"; }
const char* domain_name(Domain d) { return d == Domain::source ? "source" : "target"; }

void fill_split(Rng& rng, Dataset& ds, const SyntheticSpec& spec,
                const std::vector<std::vector<double>>& means, const std::vector<double>& cdf,
                int count, bool shifted) {
    const double ca = std::cos(spec.shift_rotation);
    const double sa = std::sin(spec.shift_rotation);
    for (int i = 0; i < count; ++i) {
        const int y = draw_class(rng, cdf);
        std::vector<double> x(spec.dim);
        for (int j = 0; j < spec.dim; ++j) x[j] = means[y][j] + spec.noise_sigma * rng.gaussian();
        if (shifted) {
            const double x0 = x[0], x1 = x[1];
            x[0] = ca * x0 - sa * x1;
            x[1] = sa * x0 + ca * x1;
            const double t = spec.shift_translation / std::sqrt(static_cast<double>(spec.dim));
            for (int j = 0; j < spec.dim; ++j) x[j] += t;
            if (spec.shift_noise > 0.0)
                for (int j = 0; j < spec.dim; ++j) x[j] += spec.shift_noise * rng.gaussian();
        }
        ds.add(std::move(x), y);
    }
    const auto hist = ds.label_histogram();
    for (int c = 0; c < ds.num_classes(); ++c)
        if (hist.counts[c] < 2)
            throw std::runtime_error(std::string("synthetic ") + domain_name(ds.domain()) + "-" +
                                     split_name(ds.split()) + " split: class " + std::to_string(c) +
                                     " has " + std::to_string(hist.counts[c]) +
                                     " examples (< 2); enlarge the split or rebalance");
}

}  // namespace

DatasetPair make_synthetic_pair(Rng& rng, const SyntheticSpec& spec) {
    if (spec.num_classes < 2) throw std::invalid_argument("synthetic: need >= 2 classes");
    if (spec.dim < 2) throw std::invalid_argument("synthetic: need dim >= 2");
    if (spec.train_per_domain < 1 || spec.test_per_domain < 1)
        throw std::invalid_argument("synthetic: split sizes must be positive");
    if (spec.noise_sigma < 0.0 || spec.shift_noise < 0.0)
        throw std::invalid_argument("synthetic: noise must be nonnegative");

    std::vector<std::vector<double>> means(spec.num_classes, std::vector<double>(spec.dim, 0.0));
    for (int c = 0; c < spec.num_classes; ++c) {
        const double th = 2.0 * 3.14159265358979323846 * c / spec.num_classes;
        means[c][0] = spec.class_sep * std::cos(th);
        means[c][1] = spec.class_sep * std::sin(th);
    }
    const auto src_cdf = class_cdf(spec.source_probs, spec.num_classes);
    const auto tgt_cdf = class_cdf(spec.target_probs, spec.num_classes);

    DatasetPair pair{Dataset(Domain::source, Split::train, spec.num_classes),
                     Dataset(Domain::source, Split::test, spec.num_classes),
                     Dataset(Domain::target, Split::train, spec.num_classes),
                     Dataset(Domain::target, Split::test, spec.num_classes)};
    fill_split(rng, pair.src_train, spec, means, src_cdf, spec.train_per_domain, false);
    fill_split(rng, pair.src_test, spec, means, src_cdf, spec.test_per_domain, false);
    fill_split(rng, pair.tgt_train, spec, means, tgt_cdf, spec.train_per_domain, true);
    fill_split(rng, pair.tgt_test, spec, means, tgt_cdf, spec.test_per_domain, true);
    return pair;
}

std::pair<Dataset, LabelHistogram> long_tail(Rng& rng, const Dataset& ds, double target_if,
                                             const std::vector<int>& class_order,
                                             std::int64_t target_total) {
    const int c_count = ds.num_classes();
    if (target_if < 1.0) throw std::invalid_argument("long_tail: target IF must be >= 1");
    if (static_cast<int>(class_order.size()) != c_count)
        throw std::invalid_argument("long_tail: class_order must list all " +
                                    std::to_string(c_count) + " classes");
    {
        std::vector<char> seen(c_count, 0);
        for (int c : class_order) {
            if (c < 0 || c >= c_count || seen[c])
                throw std::invalid_argument("long_tail: class_order is not a permutation");
            seen[c] = 1;
        }
    }
    if (!ds.has_labels()) throw std::invalid_argument("long_tail: dataset must be fully labeled");

    const auto hist = ds.label_histogram();
    const auto avail = [&](int rank) { return hist.counts[class_order[rank]]; };

    // geometric profile: count(rank) = n_max * r^(rank/(C-1)), r = 1/IF,
    // with rank 0 pinned to n_max and rank C-1 pinned to n_min
    const double r = 1.0 / target_if;
    auto rank_count = [&](std::int64_t n_max, std::int64_t n_min, int rank) -> std::int64_t {
        if (rank == 0) return n_max;
        if (rank == c_count - 1) return n_min;
        const double f = std::pow(r, static_cast<double>(rank) / (c_count - 1));
        return std::clamp<std::int64_t>(std::llround(n_max * f), n_min, n_max);
    };

    // scan n_min candidates for an exactly realizable, feasible profile
    struct Candidate {
        std::int64_t n_min = 0, n_max = 0, total = 0;
    };
    std::vector<Candidate> feasible;
    const std::int64_t n_min_cap =
        std::min<std::int64_t>(avail(c_count - 1),
                               static_cast<std::int64_t>(std::floor(avail(0) / target_if + 1e-9)));
    int binding_rank = 0;
    double binding_ratio = -1.0;
    for (std::int64_t n_min = n_min_cap; n_min >= 1; --n_min) {
        const double n_max_d = n_min * target_if;
        const std::int64_t n_max = std::llround(n_max_d);
        if (std::abs(n_max_d - n_max) > 1e-9) continue;  // IF not integral at this n_min
        if (static_cast<double>(n_max) / static_cast<double>(n_min) != target_if)
            continue;  // realized ratio must equal the target exactly
        bool ok = n_max >= n_min && n_max <= avail(0);
        std::int64_t total = 0;
        for (int rank = 0; rank < c_count && ok; ++rank) {
            const std::int64_t want = rank_count(n_max, n_min, rank);
            if (want < 1 || want > avail(rank)) ok = false;
            total += want;
        }
        if (ok) {
            feasible.push_back({n_min, n_max, total});
            if (target_total <= 0) break;  // largest data kept; no need to scan further
        }
    }
    if (feasible.empty()) {
        // name the class whose availability caps the profile hardest
        for (int rank = 0; rank < c_count; ++rank) {
            const double f = std::pow(r, static_cast<double>(rank) / (c_count - 1));
            const double need_ratio = f / std::max<double>(1.0, static_cast<double>(avail(rank)));
            if (need_ratio > binding_ratio) {
                binding_ratio = need_ratio;
                binding_rank = rank;
            }
        }
        throw std::runtime_error(
            "long_tail: IF " + std::to_string(target_if) + " unreachable; class " +
            std::to_string(class_order[binding_rank]) + " (rank " + std::to_string(binding_rank) +
            ") has only " + std::to_string(avail(binding_rank)) + " examples");
    }

    Candidate pick = feasible.front();
    if (target_total > 0) {
        std::int64_t best_gap = std::abs(pick.total - target_total);
        for (const auto& cand : feasible) {
            const std::int64_t gap = std::abs(cand.total - target_total);
            if (gap < best_gap || (gap == best_gap && cand.total > pick.total)) {
                pick = cand;
                best_gap = gap;
            }
        }
        if (best_gap > c_count)
            throw std::runtime_error("long_tail: requested total " + std::to_string(target_total) +
                                     " unreachable within +-" + std::to_string(c_count) +
                                     "; closest achievable is " + std::to_string(pick.total));
    }

    // uniform subsample without replacement per class, keep dataset order
    std::vector<std::vector<std::size_t>> pools(c_count);
    for (std::size_t i = 0; i < ds.size(); ++i) pools[ds.raw_label(i)].push_back(i);
    std::vector<std::size_t> keep;
    for (int rank = 0; rank < c_count; ++rank) {
        auto& pool = pools[class_order[rank]];
        for (std::size_t j = pool.size(); j > 1; --j)
            std::swap(pool[j - 1], pool[rng.below(j)]);
        const auto want = static_cast<std::size_t>(rank_count(pick.n_max, pick.n_min, rank));
        keep.insert(keep.end(), pool.begin(), pool.begin() + want);
    }
    std::sort(keep.begin(), keep.end());

    Dataset out(ds.domain(), ds.split(), c_count);
    out.geometry = ds.geometry;
    for (std::size_t i : keep) out.add(ds.x(i), ds.raw_label(i));
    auto out_hist = out.label_histogram();
    return {std::move(out), std::move(out_hist)};
}

}  // namespace sentry
