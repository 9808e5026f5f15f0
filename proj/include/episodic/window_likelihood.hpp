#pragma once

#include "episodic/hazard.hpp"
#include "episodic/model.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace episodic {

/// [0, T] cut into consecutive sub-windows [m s - s, m s); the last window keeps
/// the remainder when T is not a multiple of s and is closed on the right.
struct WindowPartition {
    double sub_window_length = 0.0;
    std::vector<EventSequence> windows;
};

[[nodiscard]] WindowPartition partition(const EventSequence& events, double sub_window_length);

struct WeightedGap {
    double gap;
    double weight;
};

/// Posterior expected sufficient statistics of one window (or a sum of windows).
/// Array members are indexed by mark/segment type (0 = repost, 1 = original).
struct WindowStats {
    std::vector<double> parent_posterior;         // pi_{l1}, one per event (per window only)
    double expected_episodes = 0.0;               // E[K]
    double expected_original_parents = 0.0;       // E[# parents with mark 1]
    double expected_extra_segments = 0.0;         // E[sum_k (n_k - 1)]
    std::array<double, 2> expected_segments{};    // E[# segments of type z]
    std::array<double, 2> expected_extra_events{};  // E[sum over type-z segments of (l - 1)]
    std::array<double, 2> expected_offspring{};     // E[# offspring with mark z]
    std::array<double, 2> expected_offspring_gap{};      // E[sum of offspring gaps, mark z]
    std::array<double, 2> expected_offspring_log_gap{};  // E[sum of log offspring gaps, mark z]
    std::array<std::vector<WeightedGap>, 2> offspring_gaps;  // (gap, 1 - pi_{l1}) by mark
    std::vector<WeightedPoint> parent_points;      // (t_l, pi_{l1})
    std::vector<WeightedInterval> exposure;        // parent-gap intervals and the survival tail
    double loglik = 0.0;
};

/// Log of the window marginal likelihood by summing over all 2^(n-1) labelings.
/// Limited to n <= 20 events.
[[nodiscard]] double enumerate_loglik(const EventSequence& window, const ModelParams& params);

/// Same quantity by a forward recursion over contiguous episode blocks, O(n^2).
[[nodiscard]] double dp_loglik(const EventSequence& window, const ModelParams& params);

/// Forward-backward over episode blocks: parent posteriors and expected statistics.
[[nodiscard]] WindowStats posterior_stats(const EventSequence& window, const ModelParams& params);

/// Statistics of a window under a fixed labeling (posteriors are 0/1); loglik is left at 0.
[[nodiscard]] WindowStats labeled_stats(const EventSequence& window, const LabelAssignment& labels);

/// Sum of per-window log-likelihoods.
[[nodiscard]] double composite_loglik(const WindowPartition& partition, const ModelParams& params);

} // namespace episodic
