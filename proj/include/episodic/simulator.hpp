#pragma once

#include "episodic/model.hpp"

#include <cstdint>
#include <random>

namespace episodic {

enum class TruncationPolicy {
    Drop,    // events past T are discarded
    Strict,  // the final episode is redrawn until it ends inside [0, T]
};

struct SimulationResult {
    EventSequence events;
    LabelAssignment labels;
};

/// Per-trajectory generator: 64-bit Mersenne Twister seeded through SplitMix64.
using Rng = std::mt19937_64;

[[nodiscard]] Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Max of lambda over a 10,000-point grid of one period, times 1.0001.
[[nodiscard]] double hazard_majorant(const HazardSpec& spec);

[[nodiscard]] double sample_offspring_gap(const OffspringLaw& law, Rng& rng);

/// Draws one trajectory on [0, horizon]: parents by Lewis-Shedler thinning of the
/// periodic hazard (measured from the previous event), then episode composition
/// (first type ~ Bernoulli(alpha), 1 + Pois(gamma) alternating segments, 1 + Pois(mu_z)
/// events per segment) and offspring gaps.
[[nodiscard]] SimulationResult simulate(const ModelParams& params,
                                        double horizon,
                                        std::uint64_t seed,
                                        TruncationPolicy policy = TruncationPolicy::Drop);

} // namespace episodic
