#include "episodic/window_likelihood.hpp"

#include "episodic/numeric.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace episodic {

namespace {

// Per-event factors that do not depend on the episode structure.
struct EventTerms {
    std::vector<double> parent;     // log lambda(t_l) - Lambda(t_{l-1}, t_l) + log P(first type = x_l)
    std::vector<double> offspring;  // log f_{x_l}(d_l)
    double survival = 0.0;          // -Lambda(t_n, window_end)
};

EventTerms event_terms(const EventSequence& window, const ModelParams& params, const Hazard& hazard) {
    const std::size_t n = window.size();
    EventTerms out;
    out.parent.resize(n);
    out.offspring.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
        const double t = window.time(l);
        const double prev = window.previous_time(l);
        const int x = window.mark(l);
        out.parent[l] = hazard.log_value(t) - hazard.integral(prev, t) + params.log_first_type(x);
        out.offspring[l] = l == 0 ? kNegInf : params.offspring(x).log_density(t - prev);
    }
    const double last = n == 0 ? window.window_start() : window.times().back();
    out.survival = -hazard.integral(last, window.window_end());
    return out;
}

struct BlockCounts {
    int runs = 0;
    std::array<int, 2> segments{};
    std::array<int, 2> events{};
};

// Visits every block [i..j] in order of i then j, with its log factor and run structure.
// The run bookkeeping is incremental in j, so a full sweep costs O(n^2).
template <class Visit>
void for_each_block(const EventSequence& window, const EventTerms& terms, const ModelParams& params, Visit&& visit) {
    const std::size_t n = window.size();
    const auto& marks = window.marks();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = terms.parent[i];
        double closed_runs = 0.0;  // sum of log run-size pmfs for completed runs
        int run_length = 0;
        BlockCounts counts;
        for (std::size_t j = i; j < n; ++j) {
            const int x = marks[j];
            if (j == i) {
                run_length = 1;
                counts.runs = 1;
                counts.segments[static_cast<std::size_t>(x)] = 1;
            } else {
                acc += terms.offspring[j];
                if (x != marks[j - 1]) {
                    closed_runs += log_poisson_pmf(run_length - 1, params.mu(marks[j - 1]));
                    run_length = 1;
                    ++counts.runs;
                    ++counts.segments[static_cast<std::size_t>(x)];
                } else {
                    ++run_length;
                }
            }
            ++counts.events[static_cast<std::size_t>(x)];
            const double phi = acc + closed_runs + log_poisson_pmf(run_length - 1, params.mu(x)) +
                               log_poisson_pmf(counts.runs - 1, params.gamma);
            visit(i, j, phi, counts);
        }
    }
}

struct BlockTables {
    std::vector<double> phi;  // n x n, row i, column j >= i
    std::vector<double> forward;   // log A, size n + 1
    std::vector<double> backward;  // log B, size n + 1
    double survival = 0.0;
};

BlockTables block_tables(const EventSequence& window, const ModelParams& params, const EventTerms& terms) {
    const std::size_t n = window.size();
    BlockTables tables;
    tables.survival = terms.survival;
    tables.phi.assign(n * n, kNegInf);
    for_each_block(window, terms, params, [&](std::size_t i, std::size_t j, double phi, const BlockCounts&) {
        tables.phi[i * n + j] = phi;
    });
    tables.forward.assign(n + 1, kNegInf);
    tables.forward[0] = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double acc = kNegInf;
        for (std::size_t i = 0; i <= j; ++i) {
            acc = log_add_exp(acc, tables.forward[i] + tables.phi[i * n + j]);
        }
        tables.forward[j + 1] = acc;
    }
    tables.backward.assign(n + 1, kNegInf);
    tables.backward[n] = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        double acc = kNegInf;
        for (std::size_t j = i; j < n; ++j) {
            acc = log_add_exp(acc, tables.phi[i * n + j] + tables.backward[j + 1]);
        }
        tables.backward[i] = acc;
    }
    return tables;
}

} // namespace

WindowPartition partition(const EventSequence& events, double sub_window_length) {
    if (!(sub_window_length > 0.0) || !std::isfinite(sub_window_length)) {
        throw std::invalid_argument("sub-window length must be positive");
    }
    const double start = events.window_start();
    const double span = events.window_end() - start;
    const double ratio = span / sub_window_length;
    auto count = static_cast<std::size_t>(std::ceil(ratio));
    if (std::abs(ratio - std::round(ratio)) < 1e-9 * std::max(1.0, ratio)) {
        count = static_cast<std::size_t>(std::llround(ratio));
    }
    count = std::max<std::size_t>(count, 1);

    WindowPartition out;
    out.sub_window_length = sub_window_length;
    out.windows.reserve(count);
    std::size_t cursor = 0;
    for (std::size_t m = 0; m < count; ++m) {
        const double lo = start + static_cast<double>(m) * sub_window_length;
        const bool last = m + 1 == count;
        const double hi = last ? events.window_end() : start + static_cast<double>(m + 1) * sub_window_length;
        std::vector<double> times;
        std::vector<int> marks;
        while (cursor < events.size() && (events.time(cursor) < hi || last)) {
            times.push_back(events.time(cursor));
            marks.push_back(events.mark(cursor));
            ++cursor;
        }
        out.windows.emplace_back(lo, hi, std::move(times), std::move(marks));
    }
    return out;
}

double enumerate_loglik(const EventSequence& window, const ModelParams& params) {
    const std::size_t n = window.size();
    if (n > 20) {
        throw std::invalid_argument("label enumeration limited to 20 events, got " + std::to_string(n));
    }
    if (n == 0) {
        return complete_log_density(window, LabelAssignment{}, params);
    }
    const std::size_t free_bits = n - 1;
    std::vector<double> terms;
    terms.reserve(std::size_t{1} << free_bits);
    LabelAssignment labels{std::vector<int>(n, 0)};
    labels.labels[0] = 1;
    for (std::size_t mask = 0; mask < (std::size_t{1} << free_bits); ++mask) {
        for (std::size_t b = 0; b < free_bits; ++b) {
            labels.labels[b + 1] = static_cast<int>((mask >> b) & 1U);
        }
        terms.push_back(complete_log_density(window, labels, params));
    }
    return log_sum_exp(terms);
}

double dp_loglik(const EventSequence& window, const ModelParams& params) {
    params.validate();
    const Hazard hazard(params.hazard);
    const auto terms = event_terms(window, params, hazard);
    const std::size_t n = window.size();
    if (n == 0) {
        return terms.survival;
    }
    // Forward pass only; no need to keep the full block table.
    std::vector<double> forward(n + 1, kNegInf);
    forward[0] = 0.0;
    for_each_block(window, terms, params, [&](std::size_t i, std::size_t j, double phi, const BlockCounts&) {
        forward[j + 1] = log_add_exp(forward[j + 1], forward[i] + phi);
    });
    return forward[n] + terms.survival;
}

WindowStats posterior_stats(const EventSequence& window, const ModelParams& params) {
    params.validate();
    const Hazard hazard(params.hazard);
    const auto terms = event_terms(window, params, hazard);
    const std::size_t n = window.size();

    WindowStats stats;
    const double last = n == 0 ? window.window_start() : window.times().back();
    if (n == 0) {
        stats.loglik = terms.survival;
        stats.exposure.push_back({window.window_start(), window.window_end(), 1.0});
        return stats;
    }

    const auto tables = block_tables(window, params, terms);
    const double total = tables.forward[n];
    stats.loglik = total + terms.survival;

    stats.parent_posterior.resize(n);
    CompensatedSum episodes;
    CompensatedSum original_parents;
    for (std::size_t l = 0; l < n; ++l) {
        double p = l == 0 ? 1.0 : std::exp(tables.forward[l] + tables.backward[l] - total);
        p = std::clamp(p, 0.0, 1.0);
        stats.parent_posterior[l] = p;
        episodes += p;
        const int x = window.mark(l);
        if (x == kOriginal) {
            original_parents += p;
        }
        const double t = window.time(l);
        const double prev = window.previous_time(l);
        stats.parent_points.push_back({t, p});
        stats.exposure.push_back({prev, t, p});
        if (l > 0) {
            const double w = 1.0 - p;
            const double d = t - prev;
            const auto z = static_cast<std::size_t>(x);
            stats.expected_offspring[z] += w;
            stats.expected_offspring_gap[z] += w * d;
            stats.expected_offspring_log_gap[z] += w * std::log(d);
            stats.offspring_gaps[z].push_back({d, w});
        }
    }
    stats.exposure.push_back({last, window.window_end(), 1.0});
    stats.expected_episodes = episodes.value();
    stats.expected_original_parents = original_parents.value();

    CompensatedSum extra_segments;
    std::array<CompensatedSum, 2> segments;
    std::array<CompensatedSum, 2> extra_events;
    for_each_block(window, terms, params, [&](std::size_t i, std::size_t j, double phi, const BlockCounts& c) {
        const double logp = tables.forward[i] + phi + tables.backward[j + 1] - total;
        if (logp < -745.0) {
            return;
        }
        const double p = std::exp(logp);
        extra_segments += p * (c.runs - 1);
        for (std::size_t z = 0; z < 2; ++z) {
            segments[z] += p * c.segments[z];
            extra_events[z] += p * (c.events[z] - c.segments[z]);
        }
    });
    stats.expected_extra_segments = extra_segments.value();
    for (std::size_t z = 0; z < 2; ++z) {
        stats.expected_segments[z] = segments[z].value();
        stats.expected_extra_events[z] = extra_events[z].value();
    }
    return stats;
}

double composite_loglik(const WindowPartition& partition, const ModelParams& params) {
    CompensatedSum total;
    for (const auto& window : partition.windows) {
        total += dp_loglik(window, params);
    }
    return total.value();
}

} // namespace episodic

namespace episodic {

WindowStats labeled_stats(const EventSequence& window, const LabelAssignment& labels) {
    const auto decomposition = decompose(window, labels);
    const std::size_t n = window.size();
    WindowStats stats;
    stats.parent_posterior.assign(n, 0.0);
    for (std::size_t l = 0; l < n; ++l) {
        const double p = labels.labels[l] == 1 ? 1.0 : 0.0;
        const int x = window.mark(l);
        const double t = window.time(l);
        const double prev = window.previous_time(l);
        stats.parent_posterior[l] = p;
        stats.parent_points.push_back({t, p});
        stats.exposure.push_back({prev, t, p});
        if (p == 1.0) {
            stats.expected_episodes += 1.0;
            stats.expected_original_parents += x == kOriginal ? 1.0 : 0.0;
        } else {
            const auto z = static_cast<std::size_t>(x);
            stats.expected_offspring[z] += 1.0;
            stats.expected_offspring_gap[z] += t - prev;
            stats.expected_offspring_log_gap[z] += std::log(t - prev);
            stats.offspring_gaps[z].push_back({t - prev, 1.0});
        }
    }
    const double last = n == 0 ? window.window_start() : window.times().back();
    stats.exposure.push_back({last, window.window_end(), 1.0});
    for (const auto& episode : decomposition.episodes) {
        stats.expected_extra_segments += static_cast<double>(episode.segments.size() - 1);
        for (const auto& segment : episode.segments) {
            const auto z = static_cast<std::size_t>(segment.type);
            stats.expected_segments[z] += 1.0;
            stats.expected_extra_events[z] += static_cast<double>(segment.count - 1);
        }
    }
    return stats;
}

} // namespace episodic
