#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "protoprune/errors.hpp"
#include "protoprune/rng.hpp"

namespace protoprune {

using SampleId = int;
using WeightMap = std::unordered_map<SampleId, double>;

// Inverse-power schedule splitting the per-epoch budget between the
// currently retained and currently pruned pools.
struct SchedulerConfig {
    double varsigma = 0.7;  // initial retained share
    double decay = 2.0;     // power-law decay exponent
    int total_epochs = 1;

    void validate() const {
        if (varsigma <= 0.0 || varsigma > 1.0) throw ConfigError("varsigma must be in (0, 1]");
        if (decay < 0.0) throw ConfigError("decay must be >= 0");
        if (total_epochs < 1) throw ConfigError("total_epochs must be >= 1");
    }
};

// Retained/pruned pools plus each sample's last computed sampling weight.
// Both pools are kept sorted by id; their union is always the full id set.
struct SelectionState {
    std::vector<SampleId> retained;
    std::vector<SampleId> pruned;
    WeightMap prev_weights;  // last stored (unnormalized) weight per sample
    int epoch = 0;

    // Budget-sized uniform initial draw; every sample starts at weight 1.
    static SelectionState init(const std::vector<SampleId>& all_ids, int budget, Rng& rng);
};

// Number of next-epoch samples drawn from the retained pool (decaying as
// round(budget * varsigma * (1 - t/T)^decay)) and from the pruned pool
// (the remainder). Always sums to budget.
std::pair<int, int> schedule(int t, int budget, const SchedulerConfig& cfg);

// Draw n distinct ids by successive weighted draws without replacement.
// Deterministic given the rng state. Throws BudgetExceedsPoolError when
// n exceeds the pool size.
std::vector<SampleId> weighted_sample_without_replacement(const std::vector<SampleId>& pool,
                                                          const WeightMap& weights, int n,
                                                          Rng& rng);

// One epoch transition: draw the scheduled counts from the retained pool
// (fresh weights) and the pruned pool (stored weights), clamping either
// draw to its pool size and transferring the deficit to the other. The
// union becomes the next retained set; prev_weights absorbs new_weights.
SelectionState select_next_epoch(const SelectionState& state, const WeightMap& new_weights,
                                 const SchedulerConfig& cfg, Rng& rng);

}  // namespace protoprune
