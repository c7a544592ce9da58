#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "sentry/classifier.hpp"
#include "sentry/losses.hpp"
#include "test_util.hpp"

using namespace sentry;

TEST_CASE("forward output is a unit-sum probability vector over unit features") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        auto model = testutil::small_model(100 + trial, 4, {6, 5}, 4, 0.7);
        const auto xs = testutil::random_batch(rng, 3, 4);
        for (const auto& x : xs) {
            ForwardTrace t;
            model.forward(x, t);
            double sum = 0.0;
            for (double p : t.probs) {
                CHECK(p > 0.0);
                CHECK(p < 1.0);
                sum += p;
            }
            CHECK(std::abs(sum - 1.0) < 1e-9);
            double n2 = 0.0;
            for (double f : t.unit_feat) n2 += f * f;
            CHECK(std::abs(std::sqrt(n2) - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("identical head rows give the uniform distribution") {
    ClassifierSpec spec;
    spec.input_dim = 3;
    spec.num_classes = 4;
    spec.temperature = 0.05;
    std::vector<double> params(spec.param_count());
    // head rows all equal -> equal logits -> uniform regardless of T
    for (int c = 0; c < 4; ++c)
        for (int j = 0; j < 3; ++j) params[c * 3 + j] = 0.3 * (j + 1);
    Classifier model(spec, params);
    const auto p = model.forward(std::vector<double>{1.0, -2.0, 0.5});
    for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("lowering the temperature sharpens the max probability") {
    Rng rng(21);
    for (int trial = 0; trial < 8; ++trial) {
        ClassifierSpec spec;
        spec.input_dim = 3;
        spec.hidden = {5};
        spec.num_classes = 4;
        spec.temperature = 1.0;
        Rng init(50 + trial);
        Classifier warm(spec, init);
        spec.temperature = 0.05;
        Classifier cold(spec, std::vector<double>(warm.params().begin(), warm.params().end()));

        const auto x = testutil::random_batch(rng, 1, 3)[0];
        const auto pw = warm.forward(x);
        const auto pc = cold.forward(x);
        const int cls = argmax_lowest(pw);
        // logits from a random init are never exactly equal
        CHECK(pc[cls] > pw[cls]);
    }
}

TEST_CASE("fixed two-layer forward pass matches a straight-line oracle") {
    ClassifierSpec spec;
    spec.input_dim = 2;
    spec.hidden = {3, 2};
    spec.num_classes = 3;
    spec.temperature = 0.4;
    Rng init(77);
    Classifier model(spec, init);
    const std::vector<double> x = {0.8, -1.3};

    // oracle: scalar re-walk of the same parameter vector
    const auto P = model.params();
    double h1[3], a1[3];
    for (int r = 0; r < 3; ++r) {
        h1[r] = P[model.bias_offset(0) + r];
        for (int j = 0; j < 2; ++j) h1[r] += P[model.weight_offset(0) + r * 2 + j] * x[j];
        a1[r] = h1[r] > 0 ? h1[r] : 0.0;
    }
    double h2[2], a2[2];
    for (int r = 0; r < 2; ++r) {
        h2[r] = P[model.bias_offset(1) + r];
        for (int j = 0; j < 3; ++j) h2[r] += P[model.weight_offset(1) + r * 3 + j] * a1[j];
        a2[r] = h2[r] > 0 ? h2[r] : 0.0;
    }
    const double nrm = std::sqrt(a2[0] * a2[0] + a2[1] * a2[1]);
    double z[2] = {a2[0] / nrm, a2[1] / nrm};
    double logit[3];
    for (int c = 0; c < 3; ++c) {
        logit[c] = 0.0;
        for (int j = 0; j < 2; ++j) logit[c] += P[model.head_offset() + c * 2 + j] * z[j];
        logit[c] /= 0.4;
    }
    double zsum = 0.0, expv[3];
    for (int c = 0; c < 3; ++c) zsum += expv[c] = std::exp(logit[c]);

    const auto probs = model.forward(x);
    for (int c = 0; c < 3; ++c) CHECK(probs[c] == doctest::Approx(expv[c] / zsum).epsilon(1e-12));
    CHECK(model.predict(x) == argmax_lowest({probs.data(), probs.size()}));

    const ClassDistribution dist = forward_dist(model, x);
    CHECK(dist.source == DistSource::model_output);
    for (int c = 0; c < 3; ++c) CHECK(dist.p[c] == probs[c]);
    CHECK(pseudolabel(model, x) == model.predict(x));
}

TEST_CASE("argmax ties resolve to the lowest class index") {
    CHECK(argmax_lowest(std::vector<double>{0.1, 0.7, 0.2}) == 1);
    CHECK(argmax_lowest(std::vector<double>{0.5, 0.5}) == 0);
    CHECK(argmax_lowest(std::vector<double>{0.2, 0.4, 0.4}) == 1);
}

TEST_CASE("dimension mismatch errors name expected and actual dims") {
    auto model = testutil::small_model(1, 3, {4}, 3);
    try {
        model.forward(std::vector<double>{1.0, 2.0});
        FAIL("expected a dimension error");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find('2') != std::string::npos);
        CHECK(msg.find('3') != std::string::npos);
    }
}

TEST_CASE("parameter layout offsets tile the flat vector exactly") {
    ClassifierSpec spec;
    spec.input_dim = 5;
    spec.hidden = {7, 4};
    spec.num_classes = 6;
    Rng init(9);
    Classifier model(spec, init);
    CHECK(model.weight_offset(0) == 0);
    CHECK(model.bias_offset(0) == 7 * 5);
    CHECK(model.weight_offset(1) == 7 * 5 + 7);
    CHECK(model.bias_offset(1) == 7 * 5 + 7 + 4 * 7);
    CHECK(model.head_offset() == 7 * 5 + 7 + 4 * 7 + 4);
    CHECK(spec.param_count() == model.head_offset() + 6 * 4);
    CHECK(model.params().size() == spec.param_count());
}

TEST_CASE("bad spec and bad parameter vectors are rejected") {
    ClassifierSpec spec;
    spec.input_dim = 2;
    spec.num_classes = 2;
    CHECK_THROWS_AS(Classifier(spec, std::vector<double>(3, 0.0)), std::invalid_argument);
    spec.temperature = 0.0;
    Rng rng(1);
    CHECK_THROWS_AS(Classifier(spec, rng), std::invalid_argument);
}
