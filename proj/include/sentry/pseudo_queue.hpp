#pragma once

#include <deque>
#include <stdexcept>
#include <string>

#include "sentry/losses.hpp"

namespace sentry {

// FIFO of the last Q predicted classes; its smoothed empirical distribution
// is the q(y-hat) constant of the information-entropy loss.
class PseudoLabelQueue {
public:
    PseudoLabelQueue(int capacity, int num_classes)
        : capacity_(capacity), num_classes_(num_classes) {
        if (capacity < 1) throw std::invalid_argument("queue: capacity must be >= 1");
        if (num_classes < 2) throw std::invalid_argument("queue: need >= 2 classes");
    }

    void enqueue(int label) {
        if (label < 0 || label >= num_classes_)
            throw std::invalid_argument("queue: label " + std::to_string(label) +
                                        " out of range");
        items_.push_back(label);
        if (static_cast<int>(items_.size()) > capacity_) items_.pop_front();
    }

    std::size_t size() const { return items_.size(); }
    int capacity() const { return capacity_; }
    const std::deque<int>& items() const { return items_; }

    // additive smoothing (count_c + eps) / (total + C*eps); an empty queue
    // yields the uniform distribution
    ClassDistribution distribution(double eps = 1e-8) const {
        ClassDistribution q;
        q.source = DistSource::queue_empirical;
        q.p.assign(num_classes_, 0.0);
        std::vector<std::int64_t> counts(num_classes_, 0);
        for (int l : items_) ++counts[l];
        const double denom = static_cast<double>(items_.size()) + num_classes_ * eps;
        for (int c = 0; c < num_classes_; ++c) q.p[c] = (counts[c] + eps) / denom;
        return q;
    }

private:
    int capacity_;
    int num_classes_;
    std::deque<int> items_;
};

}  // namespace sentry
