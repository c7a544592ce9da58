#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentry/dataset.hpp"
#include "sentry/rng.hpp"

namespace sentry {

enum class SamplerMode { class_balanced, pseudo_balanced, uniform };

SamplerMode parse_sampler_mode(const std::string& name);
const char* sampler_mode_name(SamplerMode mode);

// Batch index source. Class-balanced modes hold one shuffled index pool per
// class and draw by cycling classes round-robin, reshuffling a pool when it
// runs dry; `class_balanced` pools by ground-truth label (training-path
// read), `pseudo_balanced` by current pseudolabel. `uniform` draws i.i.d.
class SamplerState {
public:
    SamplerState(SamplerMode mode, std::uint64_t seed);

    SamplerMode mode() const { return mode_; }

    // (Re)builds per-class pools from the dataset's labels or pseudolabels.
    // Pool contents are per-class ascending; draw order comes from shuffling.
    void build_pools(const Dataset& ds);

    std::vector<std::size_t> next_batch(const Dataset& ds, int batch_size);

    const std::vector<std::vector<std::size_t>>& pools() const { return pools_; }

private:
    void reshuffle(std::size_t c);

    SamplerMode mode_;
    Rng rng_;
    std::vector<std::vector<std::size_t>> pools_;    // per-class example indices
    std::vector<std::vector<std::size_t>> order_;    // shuffled draw order per class
    std::vector<std::size_t> cursor_;                // position within order_[c]
    std::size_t next_class_ = 0;                     // round-robin position
    std::size_t total_ = 0;                          // dataset size at build time
    std::vector<char> warned_;                       // empty-class warning emitted
};

// Algorithm hook: rebuild the pseudo-balanced pools after an epoch of
// pseudolabel updates.
void refresh_pseudo_pools(SamplerState& sampler, const Dataset& ds);

}  // namespace sentry
