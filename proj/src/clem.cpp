#include "episodic/clem.hpp"

#include "episodic/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace episodic {

namespace {

double clamp_rate(double x) {
    return std::clamp(x, kRateMin, kRateMax);
}

// Weighted Weibull log-likelihood sum_i w_i log f(d_i; shape, scale).
double weibull_objective(const std::vector<WeightedGap>& gaps, double shape, double scale) {
    CompensatedSum total;
    for (const auto& g : gaps) {
        if (g.weight > 0.0) {
            const double z = std::log(g.gap / scale);
            total += g.weight * (std::log(shape / scale) + (shape - 1.0) * z - std::exp(shape * z));
        }
    }
    return total.value();
}

// Maximizes the weighted Weibull likelihood. The profile score in the shape is
// W/k - W S'(k)/S(k) + sum w log d, strictly decreasing in k, so a bracketed
// Newton iteration finds the unique root; the scale follows in closed form.
std::pair<double, double> weibull_mle(const std::vector<WeightedGap>& gaps, double shape_start) {
    double total_weight = 0.0;
    double weighted_log = 0.0;
    double max_log = kNegInf;
    for (const auto& g : gaps) {
        if (g.weight > 0.0) {
            total_weight += g.weight;
            weighted_log += g.weight * std::log(g.gap);
            max_log = std::max(max_log, std::log(g.gap));
        }
    }
    // S_r(k) = sum w (log d)^r e^{k (log d - max_log)}
    auto moments = [&](double k) {
        std::array<double, 3> s{};
        for (const auto& g : gaps) {
            if (g.weight > 0.0) {
                const double ld = std::log(g.gap);
                const double e = g.weight * std::exp(k * (ld - max_log));
                s[0] += e;
                s[1] += e * ld;
                s[2] += e * ld * ld;
            }
        }
        return s;
    };
    auto score = [&](double k) {
        const auto s = moments(k);
        return total_weight / k - total_weight * s[1] / s[0] + weighted_log;
    };
    double lo = 1e-10;
    double hi = std::max(1.0, shape_start);
    while (score(hi) > 0.0 && hi < kRateMax) {
        lo = hi;
        hi *= 2.0;
    }
    double k = std::clamp(shape_start, lo, hi);
    for (int it = 0; it < 200; ++it) {
        const auto s = moments(k);
        const double mean1 = s[1] / s[0];
        const double f = total_weight / k - total_weight * mean1 + weighted_log;
        if (f > 0.0) {
            lo = k;
        } else {
            hi = k;
        }
        const double deriv = -total_weight / (k * k) - total_weight * (s[2] / s[0] - mean1 * mean1);
        double next = k - f / deriv;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - k) <= 1e-14 * k || hi - lo <= 1e-15 * hi) {
            k = next;
            break;
        }
        k = next;
    }
    k = clamp_rate(k);
    const auto s = moments(k);
    // scale^k = sum w d^k / W
    const double scale = std::exp(max_log + (std::log(s[0]) - std::log(total_weight)) / k);
    return {k, clamp_rate(scale)};
}

double quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(values.size() - 1, lo + 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double max_relative_change(const ModelParams& a, const ModelParams& b) {
    const auto va = to_vector(a);
    const auto vb = to_vector(b);
    double worst = 0.0;
    for (std::size_t j = 0; j < va.size(); ++j) {
        worst = std::max(worst, std::abs(va[j] - vb[j]) / std::max(std::abs(va[j]), 1e-2));
    }
    return worst;
}

} // namespace

void FitConfig::validate() const {
    if (!(sub_window_length > 0.0)) {
        throw std::invalid_argument("sub-window length must be positive");
    }
    if (!(loglik_tolerance > 0.0) || !(param_tolerance > 0.0)) {
        throw std::invalid_argument("tolerances must be positive");
    }
    if (starts < 1) {
        throw std::invalid_argument("at least one start is required");
    }
    if (max_iterations < 1) {
        throw std::invalid_argument("max_iterations must be at least 1");
    }
}

WindowStats aggregate(const std::vector<WindowStats>& windows) {
    WindowStats out;
    CompensatedSum episodes, original, extra_segments, loglik;
    std::array<CompensatedSum, 2> segments, extra_events, offspring, gap, log_gap;
    for (const auto& w : windows) {
        out.parent_posterior.insert(out.parent_posterior.end(), w.parent_posterior.begin(), w.parent_posterior.end());
        episodes += w.expected_episodes;
        original += w.expected_original_parents;
        extra_segments += w.expected_extra_segments;
        loglik += w.loglik;
        for (std::size_t z = 0; z < 2; ++z) {
            segments[z] += w.expected_segments[z];
            extra_events[z] += w.expected_extra_events[z];
            offspring[z] += w.expected_offspring[z];
            gap[z] += w.expected_offspring_gap[z];
            log_gap[z] += w.expected_offspring_log_gap[z];
            out.offspring_gaps[z].insert(out.offspring_gaps[z].end(), w.offspring_gaps[z].begin(),
                                         w.offspring_gaps[z].end());
        }
        out.parent_points.insert(out.parent_points.end(), w.parent_points.begin(), w.parent_points.end());
        out.exposure.insert(out.exposure.end(), w.exposure.begin(), w.exposure.end());
    }
    out.expected_episodes = episodes.value();
    out.expected_original_parents = original.value();
    out.expected_extra_segments = extra_segments.value();
    out.loglik = loglik.value();
    for (std::size_t z = 0; z < 2; ++z) {
        out.expected_segments[z] = segments[z].value();
        out.expected_extra_events[z] = extra_events[z].value();
        out.expected_offspring[z] = offspring[z].value();
        out.expected_offspring_gap[z] = gap[z].value();
        out.expected_offspring_log_gap[z] = log_gap[z].value();
    }
    return out;
}

std::vector<WindowStats> window_e_step(const WindowPartition& partition, const ModelParams& params) {
    std::vector<WindowStats> out;
    out.reserve(partition.windows.size());
    for (const auto& window : partition.windows) {
        out.push_back(posterior_stats(window, params));
    }
    return out;
}

WindowStats e_step(const WindowPartition& partition, const ModelParams& params) {
    return aggregate(window_e_step(partition, params));
}

ModelParams m_step(const WindowStats& stats, const ModelParams& previous, std::vector<std::string>* held,
                   int max_newton_iterations) {
    if (!(stats.expected_episodes > 0.0)) {
        throw std::invalid_argument("M-step needs at least one expected episode (no events in any window)");
    }
    auto hold = [&](const char* name) {
        if (held != nullptr && std::find(held->begin(), held->end(), name) == held->end()) {
            held->emplace_back(name);
        }
    };
    ModelParams next = previous;
    const double episodes = stats.expected_episodes;
    next.alpha = std::clamp(stats.expected_original_parents / episodes, kAlphaClamp, 1.0 - kAlphaClamp);
    next.gamma = clamp_rate(stats.expected_extra_segments / episodes);

    for (int z : {kRepost, kOriginal}) {
        const auto zi = static_cast<std::size_t>(z);
        double& mu = z == kOriginal ? next.mu1 : next.mu0;
        if (stats.expected_segments[zi] > 0.0) {
            mu = clamp_rate(stats.expected_extra_events[zi] / stats.expected_segments[zi]);
        } else {
            hold(z == kOriginal ? "mu1" : "mu0");
        }

        auto& law = next.offspring(z);
        const char* rho_name = z == kOriginal ? "rho1" : "rho0";
        if (!(stats.expected_offspring[zi] > 0.0) || !(stats.expected_offspring_gap[zi] > 0.0)) {
            hold(rho_name);
            continue;
        }
        if (law.family == OffspringFamily::Exponential) {
            law.rate = clamp_rate(stats.expected_offspring[zi] / stats.expected_offspring_gap[zi]);
        } else {
            const auto& gaps = stats.offspring_gaps[zi];
            const auto [shape, scale] = weibull_mle(gaps, law.shape);
            const auto& prev_law = previous.offspring(z);
            if (weibull_objective(gaps, shape, scale) >= weibull_objective(gaps, prev_law.shape, prev_law.scale)) {
                law.shape = shape;
                law.scale = scale;
            }
        }
    }

    const auto hazard_fit =
        maximize_hazard_objective(previous.hazard, stats.parent_points, stats.exposure, max_newton_iterations);
    next.hazard.beta = hazard_fit.beta;
    return next;
}

ModelParams initial_guess(const WindowPartition& partition, const FitConfig& config) {
    std::vector<double> gaps;
    for (const auto& window : partition.windows) {
        for (std::size_t l = 1; l < window.size(); ++l) {
            gaps.push_back(window.gap(l));
        }
    }
    const double threshold = gaps.empty() ? 0.0 : quantile(gaps, 0.75);
    std::vector<double> short_gaps;
    for (double g : gaps) {
        if (g <= threshold) {
            short_gaps.push_back(g);
        }
    }
    const double typical_short = short_gaps.empty() ? 0.01 : std::max(quantile(short_gaps, 0.5), 1e-6);

    std::vector<WindowStats> labeled;
    double parents = 0.0;
    double span = 0.0;
    for (const auto& window : partition.windows) {
        LabelAssignment labels{std::vector<int>(window.size(), 0)};
        for (std::size_t l = 0; l < window.size(); ++l) {
            labels.labels[l] = (l == 0 || window.gap(l) > threshold) ? 1 : 0;
            parents += labels.labels[l];
        }
        labeled.push_back(labeled_stats(window, labels));
        span += window.window_end() - window.window_start();
    }
    const double rate = std::max(parents, 1.0) / std::max(span, 1e-6);

    ModelParams seed;
    seed.alpha = 0.5;
    seed.gamma = 0.5;
    seed.mu1 = 0.5;
    seed.mu0 = 0.5;
    if (config.offspring_family == OffspringFamily::Exponential) {
        seed.offspring1 = OffspringLaw::exponential(1.0 / typical_short);
    } else {
        seed.offspring1 = OffspringLaw::weibull(1.0, typical_short);
    }
    seed.offspring0 = seed.offspring1;
    seed.hazard = HazardSpec::constant(config.hazard_family, config.hazard_order, rate);

    const auto stats = aggregate(labeled);
    if (stats.expected_episodes > 0.0) {
        seed = m_step(stats, seed, nullptr, config.max_newton_iterations);
    }
    // Pull the seed off the boundary.
    seed.alpha = std::clamp(seed.alpha, 0.05, 0.95);
    seed.gamma = std::max(seed.gamma, 0.05);
    seed.mu1 = std::max(seed.mu1, 0.05);
    seed.mu0 = std::max(seed.mu0, 0.05);
    if (config.offspring_family == OffspringFamily::Exponential) {
        seed.offspring1.rate = 1.0 / typical_short;
        seed.offspring0.rate = 1.0 / typical_short;
    }
    return seed;
}

std::vector<ModelParams> starting_points(const WindowPartition& partition, const FitConfig& config) {
    std::vector<ModelParams> out;
    const ModelParams base = config.initial ? *config.initial : initial_guess(partition, config);
    out.push_back(base);
    for (int k = 1; k < config.starts; ++k) {
        std::mt19937_64 rng(mix_seed(config.seed, static_cast<std::uint64_t>(k)));
        std::uniform_real_distribution<double> decade(-0.5, 0.5);
        auto jitter = [&](double x) { return clamp_rate(x * std::pow(10.0, decade(rng))); };
        ModelParams p = base;
        p.gamma = jitter(p.gamma);
        p.mu1 = jitter(p.mu1);
        p.mu0 = jitter(p.mu0);
        for (auto* law : {&p.offspring1, &p.offspring0}) {
            if (law->family == OffspringFamily::Exponential) {
                law->rate = jitter(law->rate);
            } else {
                law->scale = jitter(law->scale);
            }
        }
        out.push_back(p);
    }
    return out;
}

FitResult run_clem(const WindowPartition& partition, const ModelParams& start, const FitConfig& config) {
    config.validate();
    start.validate();
    FitResult result;
    result.config = config;
    StartSummary summary;
    summary.initial = start;

    ModelParams current = start;
    auto windows = window_e_step(partition, current);
    auto stats = aggregate(windows);
    result.loglik_trace.push_back(stats.loglik);

    for (int it = 1; it <= config.max_iterations; ++it) {
        const ModelParams next = m_step(stats, current, &result.held_parameters, config.max_newton_iterations);
        auto next_windows = window_e_step(partition, next);
        auto next_stats = aggregate(next_windows);
        const double gain = next_stats.loglik - stats.loglik;
        result.loglik_trace.push_back(next_stats.loglik);
        result.iterations = it;
        summary.worst_drop = std::max(summary.worst_drop, -gain);
        if (gain < -kAscentSlack || !std::isfinite(next_stats.loglik)) {
            summary.ascent_ok = false;
            break;
        }
        const double change = max_relative_change(current, next);
        current = next;
        windows = std::move(next_windows);
        stats = std::move(next_stats);
        if (gain < config.loglik_tolerance && change < config.param_tolerance) {
            result.converged = true;
            break;
        }
    }
    result.params = current;
    result.stats = std::move(stats);
    result.window_stats = std::move(windows);
    result.derived = derived_quantities(current);
    summary.final_loglik = result.stats.loglik;
    summary.iterations = result.iterations;
    summary.converged = result.converged;
    result.starts.push_back(summary);
    return result;
}

FitResult fit(const EventSequence& events, const FitConfig& config) {
    config.validate();
    if (events.empty()) {
        throw std::invalid_argument("cannot fit an empty event sequence");
    }
    const auto parts = partition(events, config.sub_window_length);
    const auto starts = starting_points(parts, config);
    std::optional<FitResult> best;
    std::vector<StartSummary> summaries;
    for (const auto& start : starts) {
        auto run = run_clem(parts, start, config);
        summaries.push_back(run.starts.front());
        if (!run.starts.front().ascent_ok) {
            continue;
        }
        if (!best || run.loglik() > best->loglik()) {
            best = std::move(run);
        }
    }
    if (!best) {
        throw AscentFailure("every CLEM start violated the ascent property; worst drop " +
                            std::to_string(summaries.front().worst_drop));
    }
    best->starts = std::move(summaries);
    return std::move(*best);
}

FitResult evaluate_at(const EventSequence& events, const ModelParams& params, const FitConfig& config) {
    config.validate();
    params.validate();
    const auto parts = partition(events, config.sub_window_length);
    FitResult result;
    result.config = config;
    result.params = params;
    result.window_stats = window_e_step(parts, params);
    result.stats = aggregate(result.window_stats);
    result.loglik_trace.push_back(result.stats.loglik);
    result.derived = derived_quantities(params);
    return result;
}

DerivedQuantities derived_quantities(const ModelParams& params) {
    return DerivedQuantities{expected_events_per_episode(params), expected_episode_length(params),
                             Hazard(params.hazard).period_integral()};
}

} // namespace episodic
