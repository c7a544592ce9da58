#include <doctest.h>

#include <cmath>

#include "sentry/pseudo_queue.hpp"

using namespace sentry;

TEST_CASE("length tracks min(enqueues, capacity) with strict FIFO eviction") {
    PseudoLabelQueue q(3, 4);
    CHECK(q.size() == 0);
    q.enqueue(0);
    q.enqueue(1);
    CHECK(q.size() == 2);
    q.enqueue(2);
    q.enqueue(3);  // evicts the 0
    CHECK(q.size() == 3);
    CHECK(q.items().front() == 1);
    CHECK(q.items().back() == 3);
    q.enqueue(0);  // evicts the 1
    CHECK(q.items().front() == 2);
}

TEST_CASE("distribution is the smoothed empirical histogram") {
    PseudoLabelQueue q(8, 4);
    for (int l : {0, 0, 0, 1}) q.enqueue(l);
    const auto d = q.distribution();
    CHECK(d.source == DistSource::queue_empirical);
    const double eps = 1e-8;
    CHECK(d.p[0] == doctest::Approx((3 + eps) / (4 + 4 * eps)).epsilon(1e-15));
    CHECK(d.p[1] == doctest::Approx((1 + eps) / (4 + 4 * eps)).epsilon(1e-15));
    CHECK(d.p[2] == doctest::Approx(eps / (4 + 4 * eps)).epsilon(1e-15));
    double sum = 0.0;
    for (double v : d.p) {
        CHECK(v > 0.0);  // smoothing leaves no exact zero for the log
        sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("an empty queue reports the uniform distribution") {
    PseudoLabelQueue q(16, 5);
    const auto d = q.distribution();
    for (double v : d.p) CHECK(v == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("construction and enqueue validate their inputs") {
    CHECK_THROWS(PseudoLabelQueue(0, 4));
    CHECK_THROWS(PseudoLabelQueue(4, 1));
    PseudoLabelQueue q(4, 3);
    CHECK_THROWS(q.enqueue(-1));
    CHECK_THROWS(q.enqueue(3));
}

TEST_CASE("capacity-one queue always reflects the newest label") {
    PseudoLabelQueue q(1, 3);
    for (int l : {0, 1, 2, 1}) q.enqueue(l);
    CHECK(q.size() == 1);
    CHECK(q.items().front() == 1);
}
