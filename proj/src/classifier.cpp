#include "sentry/classifier.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sentry {

namespace {

// Divisor floor for the feature normalization; keeps z/||z|| defined at the
// (measure-zero) all-zero feature point.
constexpr double kNormFloor = 1e-12;

void validate_spec(const ClassifierSpec& spec) {
    if (spec.input_dim <= 0) throw std::invalid_argument("classifier: input_dim must be positive");
    if (spec.num_classes <= 0) throw std::invalid_argument("classifier: num_classes must be positive");
    for (int h : spec.hidden)
        if (h <= 0) throw std::invalid_argument("classifier: hidden width must be positive");
    if (!(spec.temperature > 0.0)) throw std::invalid_argument("classifier: temperature must be > 0");
}

}  // namespace

std::size_t ClassifierSpec::param_count() const {
    std::size_t n = 0;
    int in = input_dim;
    for (int out : hidden) {
        n += static_cast<std::size_t>(out) * in + out;
        in = out;
    }
    n += static_cast<std::size_t>(num_classes) * feature_dim();
    return n;
}

Classifier::Classifier(ClassifierSpec spec, Rng& rng) : spec_(std::move(spec)) {
    validate_spec(spec_);
    params_.assign(spec_.param_count(), 0.0);
    std::size_t off = 0;
    int in = spec_.input_dim;
    for (int out : spec_.hidden) {
        w_off_.push_back(off);
        const double limit = std::sqrt(6.0 / (in + out));
        for (std::size_t i = 0; i < static_cast<std::size_t>(out) * in; ++i)
            params_[off + i] = rng.uniform(-limit, limit);
        off += static_cast<std::size_t>(out) * in;
        b_off_.push_back(off);
        off += out;  // biases stay zero
        in = out;
    }
    head_off_ = off;
    const double limit = std::sqrt(6.0 / (spec_.feature_dim() + spec_.num_classes));
    for (std::size_t i = 0; i < static_cast<std::size_t>(spec_.num_classes) * spec_.feature_dim(); ++i)
        params_[head_off_ + i] = rng.uniform(-limit, limit);
}

Classifier::Classifier(ClassifierSpec spec, std::vector<double> params) : spec_(std::move(spec)) {
    validate_spec(spec_);
    if (params.size() != spec_.param_count())
        throw std::invalid_argument("classifier: parameter vector has " + std::to_string(params.size()) +
                                    " entries, spec needs " + std::to_string(spec_.param_count()));
    params_ = std::move(params);
    std::size_t off = 0;
    int in = spec_.input_dim;
    for (int out : spec_.hidden) {
        w_off_.push_back(off);
        off += static_cast<std::size_t>(out) * in;
        b_off_.push_back(off);
        off += out;
        in = out;
    }
    head_off_ = off;
}

std::size_t Classifier::weight_offset(std::size_t layer) const { return w_off_.at(layer); }
std::size_t Classifier::bias_offset(std::size_t layer) const { return b_off_.at(layer); }
std::size_t Classifier::head_offset() const { return head_off_; }

void Classifier::forward(std::span<const double> x, ForwardTrace& t) const {
    if (static_cast<int>(x.size()) != spec_.input_dim)
        throw std::invalid_argument("classifier: input has dim " + std::to_string(x.size()) +
                                    ", model expects " + std::to_string(spec_.input_dim));

    const std::size_t n_hidden = spec_.hidden.size();
    t.pre.resize(n_hidden);
    t.act.resize(n_hidden);

    std::span<const double> a = x;
    int in = spec_.input_dim;
    for (std::size_t l = 0; l < n_hidden; ++l) {
        const int out = spec_.hidden[l];
        t.pre[l].assign(out, 0.0);
        t.act[l].assign(out, 0.0);
        const double* w = params_.data() + w_off_[l];
        const double* b = params_.data() + b_off_[l];
        for (int r = 0; r < out; ++r) {
            double s = b[r];
            const double* wr = w + static_cast<std::size_t>(r) * in;
            for (int j = 0; j < in; ++j) s += wr[j] * a[j];
            t.pre[l][r] = s;
            t.act[l][r] = s > 0.0 ? s : 0.0;
        }
        a = t.act[l];
        in = out;
    }

    const int d = spec_.feature_dim();
    double norm2 = 0.0;
    for (int j = 0; j < d; ++j) norm2 += a[j] * a[j];
    t.feat_norm = std::sqrt(norm2);
    const double div = t.feat_norm > kNormFloor ? t.feat_norm : kNormFloor;
    t.unit_feat.assign(d, 0.0);
    for (int j = 0; j < d; ++j) t.unit_feat[j] = a[j] / div;

    const int c_count = spec_.num_classes;
    t.logits.assign(c_count, 0.0);
    const double* wh = params_.data() + head_off_;
    for (int c = 0; c < c_count; ++c) {
        double s = 0.0;
        const double* wr = wh + static_cast<std::size_t>(c) * d;
        for (int j = 0; j < d; ++j) s += wr[j] * t.unit_feat[j];
        t.logits[c] = s / spec_.temperature;
    }

    double mx = t.logits[0];
    for (int c = 1; c < c_count; ++c) mx = std::max(mx, t.logits[c]);
    t.probs.assign(c_count, 0.0);
    double z = 0.0;
    for (int c = 0; c < c_count; ++c) {
        t.probs[c] = std::exp(t.logits[c] - mx);
        z += t.probs[c];
    }
    for (int c = 0; c < c_count; ++c) t.probs[c] /= z;
}

std::vector<double> Classifier::forward(std::span<const double> x) const {
    ForwardTrace t;
    forward(x, t);
    return t.probs;
}

int Classifier::predict(std::span<const double> x) const {
    ForwardTrace t;
    forward(x, t);
    return argmax_lowest(t.probs);
}

void Classifier::backward_locals(const ForwardTrace& t, std::span<const double> logit_grad,
                                 BackpropLocal& out) const {
    const int d = spec_.feature_dim();
    const int c_count = spec_.num_classes;
    const std::size_t n_hidden = spec_.hidden.size();

    // head: u = W z_hat / T, so dz_hat = W^T du / T
    out.dunit.assign(d, 0.0);
    const double* wh = params_.data() + head_off_;
    for (int c = 0; c < c_count; ++c) {
        const double g = logit_grad[c] / spec_.temperature;
        const double* wr = wh + static_cast<std::size_t>(c) * d;
        for (int j = 0; j < d; ++j) out.dunit[j] += g * wr[j];
    }

    // normalization Jacobian (I - z_hat z_hat^T) / ||z||
    const double div = t.feat_norm > kNormFloor ? t.feat_norm : kNormFloor;
    double dot = 0.0;
    for (int j = 0; j < d; ++j) dot += t.unit_feat[j] * out.dunit[j];
    std::vector<double> dact(d, 0.0);
    if (t.feat_norm > kNormFloor) {
        for (int j = 0; j < d; ++j) dact[j] = (out.dunit[j] - t.unit_feat[j] * dot) / div;
    } else {
        for (int j = 0; j < d; ++j) dact[j] = out.dunit[j] / div;
    }

    out.dpre.resize(n_hidden);
    for (std::size_t li = n_hidden; li-- > 0;) {
        const int rows = spec_.hidden[li];
        out.dpre[li].assign(rows, 0.0);
        for (int r = 0; r < rows; ++r)
            out.dpre[li][r] = t.pre[li][r] > 0.0 ? dact[r] : 0.0;
        if (li == 0) break;
        const int prev = spec_.hidden[li - 1];
        const double* w = params_.data() + w_off_[li];
        dact.assign(prev, 0.0);
        for (int r = 0; r < rows; ++r) {
            const double g = out.dpre[li][r];
            const double* wr = w + static_cast<std::size_t>(r) * prev;
            for (int j = 0; j < prev; ++j) dact[j] += g * wr[j];
        }
    }
}

void Classifier::backward(std::span<const double> x, const ForwardTrace& t,
                          std::span<const double> logit_grad, std::span<double> grad) const {
    if (grad.size() != params_.size())
        throw std::invalid_argument("classifier: gradient buffer has " + std::to_string(grad.size()) +
                                    " entries, parameters have " + std::to_string(params_.size()));
    BackpropLocal loc;
    backward_locals(t, logit_grad, loc);

    const int d = spec_.feature_dim();
    const int c_count = spec_.num_classes;
    for (int c = 0; c < c_count; ++c) {
        const double g = logit_grad[c] / spec_.temperature;
        double* gr = grad.data() + head_off_ + static_cast<std::size_t>(c) * d;
        for (int j = 0; j < d; ++j) gr[j] += g * t.unit_feat[j];
    }

    std::span<const double> a = x;
    int in = spec_.input_dim;
    for (std::size_t l = 0; l < spec_.hidden.size(); ++l) {
        const int rows = spec_.hidden[l];
        double* gw = grad.data() + w_off_[l];
        double* gb = grad.data() + b_off_[l];
        for (int r = 0; r < rows; ++r) {
            const double g = loc.dpre[l][r];
            double* gr = gw + static_cast<std::size_t>(r) * in;
            for (int j = 0; j < in; ++j) gr[j] += g * a[j];
            gb[r] += g;
        }
        a = t.act[l];
        in = rows;
    }
}

int argmax_lowest(std::span<const double> values) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

}  // namespace sentry
