#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sentry/rng.hpp"

namespace sentry {

// Feed-forward classifier: affine+ReLU hidden layers, then features are
// L2-normalized and fed through a bias-free C-way head with temperature-scaled
// softmax. All parameters live in one flat vector (hidden W/b pairs in layer
// order, head weights last) so optimizers and gradient checks can treat the
// model as a single point in R^P.
struct ClassifierSpec {
    int input_dim = 0;
    std::vector<int> hidden;  // hidden widths, ReLU after each affine
    int num_classes = 0;
    double temperature = 0.05;

    int feature_dim() const { return hidden.empty() ? input_dim : hidden.back(); }
    std::size_t param_count() const;
    bool operator==(const ClassifierSpec&) const = default;
};

// Intermediates of one forward pass, reusable across calls to avoid
// reallocation in batched loops.
struct ForwardTrace {
    std::vector<std::vector<double>> pre;   // hidden preactivations
    std::vector<std::vector<double>> act;   // hidden activations (post ReLU)
    std::vector<double> unit_feat;          // L2-normalized features
    double feat_norm = 0.0;
    std::vector<double> logits;             // head output / T
    std::vector<double> probs;
};

// Per-instance backward intermediates: gradients w.r.t. every hidden
// preactivation plus the normalized features. Parameter gradients are
// assembled from these (see batch_eval for the batched path).
struct BackpropLocal {
    std::vector<std::vector<double>> dpre;
    std::vector<double> dunit;
};

class Classifier {
public:
    // Uniform Xavier init for every weight matrix, zero biases.
    Classifier(ClassifierSpec spec, Rng& rng);
    Classifier(ClassifierSpec spec, std::vector<double> params);

    const ClassifierSpec& spec() const { return spec_; }
    std::span<const double> params() const { return params_; }
    std::span<double> params() { return params_; }

    // flat-vector layout
    std::size_t weight_offset(std::size_t layer) const;
    std::size_t bias_offset(std::size_t layer) const;
    std::size_t head_offset() const;

    void forward(std::span<const double> x, ForwardTrace& t) const;
    std::vector<double> forward(std::span<const double> x) const;

    // argmax of the forward probabilities; ties go to the lowest class index
    int predict(std::span<const double> x) const;

    // Pullback of d(loss)/d(logits) down to dpre per layer and dunit.
    // `t` must hold the forward pass for the same input.
    void backward_locals(const ForwardTrace& t, std::span<const double> logit_grad,
                         BackpropLocal& out) const;

    // Accumulates the full parameter gradient for one instance into `grad`.
    void backward(std::span<const double> x, const ForwardTrace& t,
                  std::span<const double> logit_grad, std::span<double> grad) const;

private:
    ClassifierSpec spec_;
    std::vector<double> params_;
    std::vector<std::size_t> w_off_, b_off_;
    std::size_t head_off_ = 0;
};

int argmax_lowest(std::span<const double> values);

}  // namespace sentry
