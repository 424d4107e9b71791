#include "protoprune/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

namespace protoprune {

SelectionState SelectionState::init(const std::vector<SampleId>& all_ids, int budget, Rng& rng) {
    if (budget < 1 || budget > static_cast<int>(all_ids.size())) {
        throw ConfigError("SelectionState::init: budget " + std::to_string(budget) +
                          " outside [1, " + std::to_string(all_ids.size()) + "]");
    }
    SelectionState state;
    for (SampleId id : all_ids) state.prev_weights[id] = 1.0;
    state.retained = weighted_sample_without_replacement(all_ids, state.prev_weights, budget, rng);
    std::sort(state.retained.begin(), state.retained.end());

    std::vector<SampleId> sorted_ids = all_ids;
    std::sort(sorted_ids.begin(), sorted_ids.end());
    std::set_difference(sorted_ids.begin(), sorted_ids.end(), state.retained.begin(),
                        state.retained.end(), std::back_inserter(state.pruned));
    state.epoch = 0;
    return state;
}

std::pair<int, int> schedule(int t, int budget, const SchedulerConfig& cfg) {
    cfg.validate();
    if (t < 0 || t > cfg.total_epochs) {
        throw ConfigError("schedule: epoch " + std::to_string(t) + " outside [0, " +
                          std::to_string(cfg.total_epochs) + "]");
    }
    if (budget < 1) throw ConfigError("schedule: budget must be >= 1");
    const double frac = 1.0 - static_cast<double>(t) / static_cast<double>(cfg.total_epochs);
    const double share = cfg.varsigma * std::pow(frac, cfg.decay);
    int from_retained = static_cast<int>(std::lround(static_cast<double>(budget) * share));
    from_retained = std::clamp(from_retained, 0, budget);
    return {from_retained, budget - from_retained};
}

std::vector<SampleId> weighted_sample_without_replacement(const std::vector<SampleId>& pool,
                                                          const WeightMap& weights, int n,
                                                          Rng& rng) {
    if (n > static_cast<int>(pool.size())) {
        throw BudgetExceedsPoolError("weighted_sample_without_replacement: requested " +
                                     std::to_string(n) + " from pool of " +
                                     std::to_string(pool.size()));
    }
    std::vector<SampleId> candidates = pool;
    std::vector<double> w(candidates.size());
    double total = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto it = weights.find(candidates[i]);
        if (it == weights.end() || !(it->second > 0.0) || !std::isfinite(it->second)) {
            throw ConfigError("weighted_sample_without_replacement: sample " +
                              std::to_string(candidates[i]) + " lacks a positive finite weight");
        }
        w[i] = it->second;
        total += it->second;
    }

    std::vector<SampleId> chosen;
    chosen.reserve(static_cast<std::size_t>(n));
    std::size_t live = candidates.size();
    for (int draw = 0; draw < n; ++draw) {
        const double u = rng.uniform() * total;
        double acc = 0.0;
        std::size_t pick = live - 1;  // guards against round-off at the top end
        for (std::size_t i = 0; i < live; ++i) {
            acc += w[i];
            if (u < acc) {
                pick = i;
                break;
            }
        }
        chosen.push_back(candidates[pick]);
        total -= w[pick];
        candidates[pick] = candidates[live - 1];
        w[pick] = w[live - 1];
        --live;
    }
    return chosen;
}

SelectionState select_next_epoch(const SelectionState& state, const WeightMap& new_weights,
                                 const SchedulerConfig& cfg, Rng& rng) {
    const int budget = static_cast<int>(state.retained.size());
    for (SampleId id : state.retained) {
        if (new_weights.find(id) == new_weights.end()) {
            throw ConfigError("select_next_epoch: missing fresh weight for retained sample " +
                              std::to_string(id));
        }
    }

    auto [from_retained, from_pruned] = schedule(state.epoch, budget, cfg);
    // Clamp-and-transfer: neither draw may exceed its pool; the deficit
    // moves to the other pool. Pool sizes always cover the budget jointly.
    if (from_pruned > static_cast<int>(state.pruned.size())) {
        from_retained += from_pruned - static_cast<int>(state.pruned.size());
        from_pruned = static_cast<int>(state.pruned.size());
    }
    if (from_retained > static_cast<int>(state.retained.size())) {
        from_pruned += from_retained - static_cast<int>(state.retained.size());
        from_retained = static_cast<int>(state.retained.size());
    }

    const std::vector<SampleId> keep =
        weighted_sample_without_replacement(state.retained, new_weights, from_retained, rng);
    const std::vector<SampleId> revive =
        weighted_sample_without_replacement(state.pruned, state.prev_weights, from_pruned, rng);

    SelectionState next;
    next.retained.reserve(static_cast<std::size_t>(budget));
    next.retained.insert(next.retained.end(), keep.begin(), keep.end());
    next.retained.insert(next.retained.end(), revive.begin(), revive.end());
    std::sort(next.retained.begin(), next.retained.end());

    std::vector<SampleId> all_ids;
    all_ids.reserve(state.retained.size() + state.pruned.size());
    all_ids.insert(all_ids.end(), state.retained.begin(), state.retained.end());
    all_ids.insert(all_ids.end(), state.pruned.begin(), state.pruned.end());
    std::sort(all_ids.begin(), all_ids.end());
    std::set_difference(all_ids.begin(), all_ids.end(), next.retained.begin(),
                        next.retained.end(), std::back_inserter(next.pruned));

    next.prev_weights = state.prev_weights;
    for (const auto& [id, w] : new_weights) next.prev_weights[id] = w;
    next.epoch = state.epoch + 1;
    return next;
}

}  // namespace protoprune
