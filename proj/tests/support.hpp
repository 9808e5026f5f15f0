#pragma once

#include "episodic/hazard.hpp"
#include "episodic/model.hpp"
#include "episodic/numeric.hpp"
#include "episodic/window_likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testing {

using namespace episodic;

inline ModelParams study_params() {
    ModelParams p;
    p.alpha = 0.6;
    p.gamma = 0.5;
    p.mu1 = 0.5;
    p.mu0 = 0.5;
    p.offspring1 = OffspringLaw::exponential(10.0);
    p.offspring0 = OffspringLaw::exponential(15.0);
    p.hazard = HazardSpec::sinusoidal({-2.0, -2.0, 2.0});
    return p;
}

inline HazardSpec random_hazard(std::mt19937_64& rng, HazardFamily family) {
    std::normal_distribution<double> coef(0.0, 0.6);
    std::uniform_real_distribution<double> level(-0.5, 1.5);
    if (family == HazardFamily::Sinusoidal) {
        const int q = std::uniform_int_distribution<int>(1, 2)(rng);
        std::vector<double> beta{level(rng)};
        for (int j = 0; j < 2 * q; ++j) {
            beta.push_back(coef(rng));
        }
        return HazardSpec::sinusoidal(beta);
    }
    const int knots = std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? 5 : 7;
    std::vector<double> beta;
    for (int j = 0; j < knots; ++j) {
        beta.push_back(level(rng) + coef(rng));
    }
    return HazardSpec::cyclic_bspline(knots, beta);
}

inline ModelParams random_params(std::mt19937_64& rng, HazardFamily hazard, OffspringFamily offspring) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ModelParams p;
    p.alpha = 0.15 + 0.7 * u(rng);
    p.gamma = 0.05 + 2.0 * u(rng);
    p.mu1 = 0.05 + 2.0 * u(rng);
    p.mu0 = 0.05 + 2.0 * u(rng);
    if (offspring == OffspringFamily::Exponential) {
        p.offspring1 = OffspringLaw::exponential(2.0 + 30.0 * u(rng));
        p.offspring0 = OffspringLaw::exponential(2.0 + 30.0 * u(rng));
    } else {
        p.offspring1 = OffspringLaw::weibull(0.5 + 1.5 * u(rng), 0.02 + 0.3 * u(rng));
        p.offspring0 = OffspringLaw::weibull(0.5 + 1.5 * u(rng), 0.02 + 0.3 * u(rng));
    }
    p.hazard = random_hazard(rng, hazard);
    return p;
}

/// Events scattered in bursts over [start, start + length].
inline EventSequence random_window(std::mt19937_64& rng, std::size_t n, double start = 0.0, double length = 2.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> times;
    while (times.size() < n) {
        const double centre = start + length * u(rng);
        const std::size_t burst = 1 + static_cast<std::size_t>(4 * u(rng));
        for (std::size_t k = 0; k < burst && times.size() < n; ++k) {
            const double t = centre + 0.05 * length * u(rng);
            if (t > start && t < start + length) {
                times.push_back(t);
            }
        }
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<int> marks;
    for (std::size_t i = 0; i < times.size(); ++i) {
        marks.push_back(u(rng) < 0.5 ? 1 : 0);
    }
    return EventSequence(start, start + length, times, marks);
}

/// Calls fn(labels) for every labeling with labels[0] = 1.
inline void for_each_labeling(std::size_t n, const std::function<void(const LabelAssignment&)>& fn) {
    if (n == 0) {
        fn(LabelAssignment{});
        return;
    }
    const std::size_t count = std::size_t{1} << (n - 1);
    for (std::size_t mask = 0; mask < count; ++mask) {
        LabelAssignment y;
        y.labels.assign(n, 0);
        y.labels[0] = 1;
        for (std::size_t l = 1; l < n; ++l) {
            y.labels[l] = static_cast<int>((mask >> (l - 1)) & 1U);
        }
        fn(y);
    }
}

/// Posterior expectations computed label by label from the episode decomposition.
struct OracleStats {
    double loglik = 0.0;
    std::vector<double> parent_posterior;
    double episodes = 0.0;
    double original_parents = 0.0;
    double extra_segments = 0.0;
    std::array<double, 2> segments{};
    std::array<double, 2> extra_events{};
    std::array<double, 2> offspring{};
    std::array<double, 2> offspring_gap{};
    std::array<double, 2> offspring_log_gap{};
    double hazard_objective = 0.0;  // E[sum_parents log lambda - parent exposure - tail] at `probe`
};

inline OracleStats enumerate_stats(const EventSequence& w, const ModelParams& params, const HazardSpec& probe) {
    const std::size_t n = w.size();
    std::vector<double> logs;
    std::vector<LabelAssignment> all;
    for_each_labeling(n, [&](const LabelAssignment& y) {
        all.push_back(y);
        logs.push_back(complete_log_density(w, y, params));
    });
    OracleStats out;
    out.loglik = log_sum_exp(logs);
    out.parent_posterior.assign(n, 0.0);
    const Hazard lambda(probe);
    for (std::size_t a = 0; a < all.size(); ++a) {
        const double p = std::exp(logs[a] - out.loglik);
        const auto& y = all[a];
        const auto dec = decompose(w, y);
        double hz = -lambda.integral(n == 0 ? w.window_start() : w.time(n - 1), w.window_end());
        for (std::size_t l = 0; l < n; ++l) {
            if (y.labels[l] == 1) {
                out.parent_posterior[l] += p;
                hz += lambda.log_value(w.time(l)) - lambda.integral(w.previous_time(l), w.time(l));
            } else {
                const auto z = static_cast<std::size_t>(w.mark(l));
                out.offspring[z] += p;
                out.offspring_gap[z] += p * w.gap(l);
                out.offspring_log_gap[z] += p * std::log(w.gap(l));
            }
        }
        out.hazard_objective += p * hz;
        for (const auto& ep : dec.episodes) {
            out.episodes += p;
            out.original_parents += p * (w.mark(ep.first) == 1 ? 1.0 : 0.0);
            out.extra_segments += p * static_cast<double>(ep.segments.size() - 1);
            for (const auto& seg : ep.segments) {
                const auto z = static_cast<std::size_t>(seg.type);
                out.segments[z] += p;
                out.extra_events[z] += p * static_cast<double>(seg.count - 1);
            }
        }
    }
    return out;
}

inline double relative_error(double a, double b) {
    return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

} // namespace testing
