#pragma once

#include "episodic/hazard.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace episodic {

inline constexpr int kOriginal = 1;
inline constexpr int kRepost = 0;

/// Ordered event times (days) with original/repost marks on [window_start, window_end].
/// Gap of the first event is measured from window_start.
class EventSequence {
public:
    EventSequence() = default;
    EventSequence(double window_start, double window_end, std::vector<double> times, std::vector<int> marks);

    [[nodiscard]] double window_start() const noexcept { return window_start_; }
    [[nodiscard]] double window_end() const noexcept { return window_end_; }
    [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
    [[nodiscard]] bool empty() const noexcept { return times_.empty(); }
    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
    [[nodiscard]] const std::vector<int>& marks() const noexcept { return marks_; }

    [[nodiscard]] double time(std::size_t l) const { return times_[l]; }
    [[nodiscard]] int mark(std::size_t l) const { return marks_[l]; }
    /// times[l] - times[l-1], with times[-1] := window_start.
    [[nodiscard]] double gap(std::size_t l) const;
    [[nodiscard]] double previous_time(std::size_t l) const;
    [[nodiscard]] std::vector<double> gaps() const;

private:
    double window_start_ = 0.0;
    double window_end_ = 0.0;
    std::vector<double> times_;
    std::vector<int> marks_;
};

/// Parent (1) / offspring (0) indicator per event.
struct LabelAssignment {
    std::vector<int> labels;
};

struct Segment {
    std::size_t first;
    std::size_t count;
    int type;
};

struct Episode {
    std::size_t first;  // inclusive
    std::size_t last;   // inclusive
    std::vector<Segment> segments;
};

struct EpisodeDecomposition {
    std::vector<Episode> episodes;
};

enum class OffspringFamily { Exponential, Weibull };

/// Offspring gap-time law: exponential(rate) or Weibull(shape, scale).
struct OffspringLaw {
    OffspringFamily family = OffspringFamily::Exponential;
    double rate = 1.0;
    double shape = 1.0;
    double scale = 1.0;

    static OffspringLaw exponential(double rate);
    static OffspringLaw weibull(double shape, double scale);

    [[nodiscard]] double log_density(double gap) const;
    [[nodiscard]] double cdf(double gap) const;
    [[nodiscard]] double mean() const;
    [[nodiscard]] std::size_t dimension() const { return family == OffspringFamily::Exponential ? 1 : 2; }
    void validate() const;
};

struct ModelParams {
    double alpha = 0.5;
    double gamma = 0.0;
    double mu1 = 0.0;
    double mu0 = 0.0;
    OffspringLaw offspring1;  // gaps before offspring original posts
    OffspringLaw offspring0;  // gaps before offspring reposts
    HazardSpec hazard;

    [[nodiscard]] const OffspringLaw& offspring(int mark) const { return mark == kOriginal ? offspring1 : offspring0; }
    [[nodiscard]] OffspringLaw& offspring(int mark) { return mark == kOriginal ? offspring1 : offspring0; }
    [[nodiscard]] double mu(int type) const { return type == kOriginal ? mu1 : mu0; }
    [[nodiscard]] double log_first_type(int type) const;
    void validate() const;
};

/// Flattened coordinates (alpha, gamma, mu1, mu0, rho1..., rho0..., beta...).
[[nodiscard]] std::vector<double> to_vector(const ModelParams& params);
[[nodiscard]] ModelParams from_vector(std::span<const double> values, const ModelParams& layout);
[[nodiscard]] std::vector<std::string> parameter_names(const ModelParams& layout);

[[nodiscard]] EpisodeDecomposition decompose(const EventSequence& events, const LabelAssignment& labels);
[[nodiscard]] LabelAssignment flatten(const EpisodeDecomposition& decomposition, std::size_t n);

/// log f(t, x, y | theta) for one window, including the survival term to window_end.
[[nodiscard]] double complete_log_density(const EventSequence& events,
                                          const LabelAssignment& labels,
                                          const ModelParams& params);

/// c(gamma, alpha) = e^{-gamma} (alpha - 1/2) cosh(gamma).
[[nodiscard]] double c_coefficient(double gamma, double alpha);
[[nodiscard]] double expected_events_per_episode(const ModelParams& params);
[[nodiscard]] double expected_episode_length(const ModelParams& params);

} // namespace episodic
