#include "sentry/sampler.hpp"

#include <iostream>
#include <stdexcept>

namespace sentry {

SamplerMode parse_sampler_mode(const std::string& name) {
    if (name == "class_balanced") return SamplerMode::class_balanced;
    if (name == "pseudo_balanced") return SamplerMode::pseudo_balanced;
    if (name == "uniform") return SamplerMode::uniform;
    throw std::invalid_argument("unknown sampler mode '" + name +
                                "' (want class_balanced|pseudo_balanced|uniform)");
}

const char* sampler_mode_name(SamplerMode mode) {
    switch (mode) {
        case SamplerMode::class_balanced: return "class_balanced";
        case SamplerMode::pseudo_balanced: return "pseudo_balanced";
        case SamplerMode::uniform: return "uniform";
    }
    return "?";
}

SamplerState::SamplerState(SamplerMode mode, std::uint64_t seed) : mode_(mode), rng_(seed) {}

void SamplerState::build_pools(const Dataset& ds) {
    total_ = ds.size();
    if (mode_ == SamplerMode::uniform) {
        pools_.clear();
        order_.clear();
        cursor_.clear();
        return;
    }
    pools_.assign(ds.num_classes(), {});
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int c = mode_ == SamplerMode::class_balanced ? ds.label(i) : ds.pseudo(i);
        if (c < 0) {
            if (mode_ == SamplerMode::class_balanced)
                throw std::invalid_argument("sampler: example " + std::to_string(i) +
                                            " has no label for class-balanced pooling");
            continue;  // pseudolabel not set yet
        }
        pools_[c].push_back(i);
    }
    order_.assign(pools_.size(), {});
    cursor_.assign(pools_.size(), 0);
    if (warned_.size() != pools_.size()) warned_.assign(pools_.size(), 0);
    for (std::size_t c = 0; c < pools_.size(); ++c) reshuffle(c);
    next_class_ = 0;
}

void SamplerState::reshuffle(std::size_t c) {
    order_[c] = pools_[c];
    auto& o = order_[c];
    for (std::size_t j = o.size(); j > 1; --j) std::swap(o[j - 1], o[rng_.below(j)]);
    cursor_[c] = 0;
}

std::vector<std::size_t> SamplerState::next_batch(const Dataset& ds, int batch_size) {
    if (batch_size < 1) throw std::invalid_argument("sampler: batch size must be >= 1");
    std::vector<std::size_t> batch;
    batch.reserve(batch_size);

    if (mode_ == SamplerMode::uniform) {
        if (ds.size() == 0) throw std::runtime_error("sampler: empty dataset");
        for (int i = 0; i < batch_size; ++i) batch.push_back(rng_.below(ds.size()));
        return batch;
    }

    if (pools_.empty()) build_pools(ds);
    bool any = false;
    for (const auto& p : pools_) any = any || !p.empty();
    if (!any) throw std::runtime_error("sampler: all class pools are empty");

    while (static_cast<int>(batch.size()) < batch_size) {
        const std::size_t c = next_class_;
        next_class_ = (next_class_ + 1) % pools_.size();
        if (pools_[c].empty()) {
            if (!warned_[c]) {
                warned_[c] = 1;
                std::cerr << "warning: sampler skipping class " << c << " (empty pool)\n";
            }
            continue;
        }
        if (cursor_[c] >= order_[c].size()) reshuffle(c);
        batch.push_back(order_[c][cursor_[c]++]);
    }
    return batch;
}

void refresh_pseudo_pools(SamplerState& sampler, const Dataset& ds) {
    if (sampler.mode() != SamplerMode::pseudo_balanced) return;
    sampler.build_pools(ds);
}

}  // namespace sentry
