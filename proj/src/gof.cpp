#include "episodic/gof.hpp"

#include "episodic/numeric.hpp"

#include "episodic/simulator.hpp"
#include "episodic/window_likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace episodic {

StepCdf::StepCdf(std::vector<double> values) : StepCdf(values, std::vector<double>(values.size(), 1.0)) {}

StepCdf::StepCdf(std::vector<double> values, std::vector<double> weights) {
    if (values.size() != weights.size()) {
        throw std::invalid_argument("values and weights differ in length");
    }
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    values_.reserve(values.size());
    cumulative_.reserve(values.size());
    for (std::size_t i : order) {
        if (weights[i] < 0.0) {
            throw std::invalid_argument("CDF weights must be nonnegative");
        }
        total_ += weights[i];
        total_sq_ += weights[i] * weights[i];
        values_.push_back(values[i]);
        cumulative_.push_back(total_);
    }
}

double StepCdf::operator()(double v) const {
    if (!(total_ > 0.0)) {
        return 0.0;
    }
    // number of values strictly below v
    const auto it = std::lower_bound(values_.begin(), values_.end(), v);
    if (it == values_.begin()) {
        return 0.0;
    }
    const auto idx = static_cast<std::size_t>(it - values_.begin()) - 1;
    return std::min(1.0, cumulative_[idx] / total_);
}

std::vector<double> StepCdf::evaluate(std::span<const double> grid) const {
    std::vector<double> out;
    out.reserve(grid.size());
    for (double v : grid) {
        out.push_back((*this)(v));
    }
    return out;
}

StepCdf empirical_gap_cdf(const EventSequence& events) {
    return StepCdf(events.gaps());
}

std::vector<double> default_v_grid(const EventSequence& events, std::size_t points) {
    auto gaps = events.gaps();
    if (gaps.empty() || points < 2) {
        return gaps;
    }
    std::sort(gaps.begin(), gaps.end());
    std::vector<double> grid;
    grid.reserve(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double pos = static_cast<double>(i) * static_cast<double>(gaps.size() - 1) / static_cast<double>(points - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(gaps.size() - 1, lo + 1);
        grid.push_back(gaps[lo] + (pos - static_cast<double>(lo)) * (gaps[hi] - gaps[lo]));
    }
    return grid;
}

Envelope envelope(const EventSequence& events,
                  const ModelParams& params,
                  int replicates,
                  std::span<const double> v_grid,
                  std::uint64_t seed) {
    if (replicates < 1) {
        throw std::invalid_argument("envelope needs at least one replicate");
    }
    Envelope out;
    out.v.assign(v_grid.begin(), v_grid.end());
    out.observed = empirical_gap_cdf(events).evaluate(v_grid);
    const std::size_t g = v_grid.size();
    out.mean.assign(g, 0.0);
    out.upper.assign(g, -1.0);
    out.lower.assign(g, 2.0);
    const double horizon = events.window_end() - events.window_start();
    for (int r = 0; r < replicates; ++r) {
        const auto sim = simulate(params, horizon, mix_seed(seed, static_cast<std::uint64_t>(r)));
        std::vector<double> curve(g, 0.0);
        if (sim.events.empty()) {
            ++out.empty_replicates;
        } else {
            curve = empirical_gap_cdf(sim.events).evaluate(v_grid);
        }
        for (std::size_t i = 0; i < g; ++i) {
            out.mean[i] += curve[i] / replicates;
            out.upper[i] = std::max(out.upper[i], curve[i]);
            out.lower[i] = std::min(out.lower[i], curve[i]);
        }
    }
    // rounding guard
    for (std::size_t i = 0; i < g; ++i) {
        out.mean[i] = std::clamp(out.mean[i], out.lower[i], out.upper[i]);
    }
    return out;
}

namespace {

// Band: F-hat +- 1.96 SE, with the SE of a weighted indicator mean evaluated at the model CDF.
CdfComparison weighted_comparison(const StepCdf& cdf, std::span<const double> v_grid, std::vector<double> model) {
    CdfComparison out;
    out.v.assign(v_grid.begin(), v_grid.end());
    out.empirical = cdf.evaluate(v_grid);
    out.model = std::move(model);
    const double total = cdf.total_weight();
    const double ratio = cdf.squared_weight() / (total * total);
    for (std::size_t i = 0; i < out.empirical.size(); ++i) {
        const double f = out.empirical[i];
        const double m = out.model[i];
        const double se = std::sqrt(std::max(0.0, m * (1.0 - m) * ratio));
        out.ci_lower.push_back(std::max(0.0, f - 1.96 * se));
        out.ci_upper.push_back(std::min(1.0, f + 1.96 * se));
    }
    return out;
}

} // namespace

CdfComparison offspring_cdf_check(const EventSequence& events,
                                  const FitResult& fit,
                                  int mark,
                                  std::span<const double> v_grid) {
    const auto& posterior = fit.stats.parent_posterior;
    if (posterior.size() != events.size()) {
        throw std::invalid_argument("fit posteriors do not match the event sequence");
    }
    std::vector<double> gaps;
    std::vector<double> weights;
    for (std::size_t l = 0; l < events.size(); ++l) {
        if (events.mark(l) == mark) {
            gaps.push_back(events.gap(l));
            weights.push_back(1.0 - posterior[l]);
        }
    }
    StepCdf cdf(std::move(gaps), std::move(weights));
    if (!(cdf.total_weight() > 0.0)) {
        throw std::invalid_argument("no posterior offspring weight for the requested mark");
    }
    const auto& law = fit.params.offspring(mark);
    std::vector<double> model;
    for (double v : v_grid) {
        model.push_back(law.cdf(v));
    }
    return weighted_comparison(cdf, v_grid, std::move(model));
}

std::vector<double> rescaled_gaps(const EventSequence& events, const HazardSpec& hazard, double sub_window_length) {
    const Hazard lambda(hazard);
    const auto parts = partition(events, sub_window_length);
    std::vector<double> out;
    out.reserve(events.size());
    for (const auto& window : parts.windows) {
        for (std::size_t l = 0; l < window.size(); ++l) {
            out.push_back(lambda.integral(window.previous_time(l), window.time(l)));
        }
    }
    return out;
}

CdfComparison rescaled_parent_check(const EventSequence& events, const FitResult& fit, std::span<const double> v_grid) {
    const auto& posterior = fit.stats.parent_posterior;
    if (posterior.size() != events.size()) {
        throw std::invalid_argument("fit posteriors do not match the event sequence");
    }
    StepCdf cdf(rescaled_gaps(events, fit.params.hazard, fit.config.sub_window_length), posterior);
    if (!(cdf.total_weight() > 0.0)) {
        throw std::invalid_argument("parent posterior weights sum to zero");
    }
    std::vector<double> model;
    for (double v : v_grid) {
        model.push_back(v > 0.0 ? -std::expm1(-v) : 0.0);
    }
    return weighted_comparison(cdf, v_grid, std::move(model));
}

KsResult ks_test_unit_exponential(std::span<const double> sample) {
    if (sample.empty()) {
        throw std::invalid_argument("KS test needs a nonempty sample");
    }
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const auto n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = x[i] > 0.0 ? -std::expm1(-x[i]) : 0.0;
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    const double root = std::sqrt(n);
    const double lambda = (root + 0.12 + 0.11 / root) * d;
    if (lambda < 0.2) {
        return KsResult{d, 1.0};
    }
    double p = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        p += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) {
            break;
        }
    }
    return KsResult{d, std::clamp(p, 0.0, 1.0)};
}

} // namespace episodic
