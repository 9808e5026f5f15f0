#include "episodic/simulator.hpp"

#include "episodic/numeric.hpp"

#include <cmath>
#include <stdexcept>

namespace episodic {

namespace {

constexpr int kMajorantGrid = 10000;
constexpr double kMajorantSafety = 1.0001;
constexpr int kStrictRetries = 100000;

struct EpisodeDraw {
    std::vector<double> times;
    std::vector<int> marks;
};

EpisodeDraw draw_episode(const ModelParams& params, double parent_time, Rng& rng) {
    std::bernoulli_distribution first_original(params.alpha);
    std::poisson_distribution<int> extra_segments(params.gamma);
    EpisodeDraw out;
    int type = first_original(rng) ? kOriginal : kRepost;
    const int segments = 1 + (params.gamma > 0.0 ? extra_segments(rng) : 0);
    double t = parent_time;
    for (int s = 0; s < segments; ++s) {
        const double mu = params.mu(type);
        int size = 1;
        if (mu > 0.0) {
            std::poisson_distribution<int> extra(mu);
            size += extra(rng);
        }
        for (int e = 0; e < size; ++e) {
            if (s > 0 || e > 0) {
                t += sample_offspring_gap(params.offspring(type), rng);
            }
            out.times.push_back(t);
            out.marks.push_back(type);
        }
        type = 1 - type;
    }
    return out;
}

} // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix_seed(seed, stream));
}

double hazard_majorant(const HazardSpec& spec) {
    const Hazard hazard(spec);
    double peak = 0.0;
    for (int i = 0; i < kMajorantGrid; ++i) {
        peak = std::max(peak, hazard(static_cast<double>(i) / kMajorantGrid));
    }
    const double bound = peak * kMajorantSafety;
    if (!std::isfinite(bound) || bound > 1e12) {
        throw std::overflow_error("hazard majorant overflow; coefficients are out of range");
    }
    return bound;
}

double sample_offspring_gap(const OffspringLaw& law, Rng& rng) {
    if (law.family == OffspringFamily::Exponential) {
        std::exponential_distribution<double> gap(law.rate);
        return gap(rng);
    }
    std::weibull_distribution<double> gap(law.shape, law.scale);
    return gap(rng);
}

SimulationResult simulate(const ModelParams& params, double horizon, std::uint64_t seed, TruncationPolicy policy) {
    params.validate();
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("simulation horizon must be positive and finite");
    }
    const Hazard hazard(params.hazard);
    const double majorant = hazard_majorant(params.hazard);
    Rng rng = make_rng(seed);
    std::exponential_distribution<double> proposal(majorant);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<double> times;
    std::vector<int> marks;
    std::vector<int> labels;
    double now = 0.0;
    while (true) {
        double candidate = now;
        do {
            candidate += proposal(rng);
        } while (candidate <= horizon && unit(rng) * majorant > hazard(candidate));
        if (candidate > horizon) {
            break;
        }
        EpisodeDraw episode = draw_episode(params, candidate, rng);
        if (policy == TruncationPolicy::Strict) {
            int attempts = 0;
            while (episode.times.back() > horizon) {
                if (++attempts > kStrictRetries) {
                    throw std::runtime_error("strict truncation could not contain the final episode");
                }
                episode = draw_episode(params, candidate, rng);
            }
        }
        for (std::size_t e = 0; e < episode.times.size(); ++e) {
            if (episode.times[e] > horizon) {
                break;
            }
            // drop exact ties
            if (!times.empty() && !(episode.times[e] > times.back())) {
                continue;
            }
            times.push_back(episode.times[e]);
            marks.push_back(episode.marks[e]);
            labels.push_back(e == 0 ? 1 : 0);
        }
        now = episode.times.back();
        if (now > horizon) {
            break;
        }
    }
    return SimulationResult{EventSequence(0.0, horizon, std::move(times), std::move(marks)), LabelAssignment{std::move(labels)}};
}

} // namespace episodic
