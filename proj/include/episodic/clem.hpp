#pragma once

#include "episodic/hazard.hpp"
#include "episodic/model.hpp"
#include "episodic/window_likelihood.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace episodic {

struct FitConfig {
    double sub_window_length = 7.0;
    int max_iterations = 500;
    double loglik_tolerance = 1e-8;
    double param_tolerance = 1e-6;
    int starts = 5;
    std::uint64_t seed = 1;
    OffspringFamily offspring_family = OffspringFamily::Exponential;
    HazardFamily hazard_family = HazardFamily::CyclicBSpline;
    int hazard_order = 7;  // harmonics (sinusoidal) or knots (B-spline)
    int max_newton_iterations = 50;
    /// Used as the first start instead of the moment-based seed when set.
    std::optional<ModelParams> initial;

    void validate() const;
};

enum class VarianceMethod { Sandwich, SimulationCov };

struct VarianceEstimate {
    VarianceMethod method = VarianceMethod::Sandwich;
    Eigen::MatrixXd covariance;
    std::vector<double> standard_errors;
    std::vector<std::string> warnings;
};

struct DerivedQuantities {
    double events_per_episode = 0.0;
    double episode_length = 0.0;
    double avg_daily_hazard = 0.0;
};

struct StartSummary {
    ModelParams initial;
    double final_loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    bool ascent_ok = true;
    double worst_drop = 0.0;  // largest decrease of the composite log-likelihood seen
};

struct FitResult {
    ModelParams params;
    std::vector<double> loglik_trace;
    bool converged = false;
    int iterations = 0;
    WindowStats stats;                       // aggregated at the estimate
    std::vector<WindowStats> window_stats;   // per window at the estimate
    std::optional<VarianceEstimate> variance;
    DerivedQuantities derived;
    std::vector<StartSummary> starts;
    std::vector<std::string> held_parameters;  // M-step updates skipped for lack of data
    FitConfig config;

    [[nodiscard]] double loglik() const { return loglik_trace.empty() ? 0.0 : loglik_trace.back(); }
};

class AscentFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kAlphaClamp = 1e-8;
inline constexpr double kRateMin = 1e-10;
inline constexpr double kRateMax = 1e10;
inline constexpr double kAscentSlack = 1e-8;

/// Sum of per-window statistics; parent posteriors are concatenated in event order.
[[nodiscard]] WindowStats aggregate(const std::vector<WindowStats>& windows);
[[nodiscard]] std::vector<WindowStats> window_e_step(const WindowPartition& partition, const ModelParams& params);
[[nodiscard]] WindowStats e_step(const WindowPartition& partition, const ModelParams& params);

/// Closed-form updates for alpha, gamma, mu and exponential rates; profile Newton
/// for Weibull shape; Newton ascent for the hazard coefficients. Parameters whose
/// expected denominator is zero keep their previous value and are listed in `held`.
[[nodiscard]] ModelParams m_step(const WindowStats& stats,
                                 const ModelParams& previous,
                                 std::vector<std::string>* held = nullptr,
                                 int max_newton_iterations = 50);

/// Moment-style seed from a threshold labeling (gaps above the 75th percentile
/// start episodes).
[[nodiscard]] ModelParams initial_guess(const WindowPartition& partition, const FitConfig& config);
[[nodiscard]] std::vector<ModelParams> starting_points(const WindowPartition& partition, const FitConfig& config);

/// One CLEM run from a fixed start. Records ascent violations instead of throwing.
[[nodiscard]] FitResult run_clem(const WindowPartition& partition, const ModelParams& start, const FitConfig& config);

/// Best-of-starts CLEM fit. Throws AscentFailure if every start violated ascent.
[[nodiscard]] FitResult fit(const EventSequence& events, const FitConfig& config);

/// Posterior statistics at fixed parameters, packaged like a fit (no iterations).
[[nodiscard]] FitResult evaluate_at(const EventSequence& events, const ModelParams& params, const FitConfig& config);

[[nodiscard]] DerivedQuantities derived_quantities(const ModelParams& params);

} // namespace episodic
