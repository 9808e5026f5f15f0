#pragma once

#include "episodic/clem.hpp"
#include "episodic/model.hpp"
#include "episodic/window_likelihood.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>

namespace episodic {

/// Gradient of the complete-data log density in the flattened coordinates of
/// to_vector(), averaged over labelings with the posterior weights in `stats`
/// (Fisher's identity when stats come from posterior_stats at `params`).
[[nodiscard]] Eigen::VectorXd score_from_stats(const WindowStats& stats, const ModelParams& params);

/// U_m = d/dtheta log f(t_m, x_m | theta) for one window.
[[nodiscard]] Eigen::VectorXd window_score(const EventSequence& window, const ModelParams& params);

/// Sum of window scores over a partition.
[[nodiscard]] Eigen::VectorXd composite_score(const WindowPartition& partition, const ModelParams& params);

/// Sandwich covariance under independent window scores:
///   I0 = (1/(sM)) sum_m dU_m/dtheta,   I_M^{-1} = I0^{-1} [(1/(s^2 M)) sum_m U_m U_m^T] I0^{-T},
/// and Var(theta-hat) = I_M^{-1} / M. The s and M factors cancel, so this equals
/// H^{-1} J H^{-1} with H the summed score Jacobian and J the summed outer products.
[[nodiscard]] VarianceEstimate sandwich(const FitResult& fit, const WindowPartition& partition);

struct SimulationCovariance {
    VarianceEstimate estimate;
    int failed_replicates = 0;
    std::vector<std::vector<double>> replicate_estimates;
};

/// Sample covariance of estimates refitted on trajectories simulated at the fit.
/// Each replicate starts CLEM at the fitted parameters. Throws if more than 20%
/// of replicate fits fail.
[[nodiscard]] SimulationCovariance simulation_cov(const FitResult& fit,
                                                  double horizon,
                                                  std::span<const std::uint64_t> seeds);
[[nodiscard]] SimulationCovariance simulation_cov(const FitResult& fit,
                                                  double horizon,
                                                  int replicates,
                                                  std::uint64_t seed);

[[nodiscard]] double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationEstimate {
    double r = 0.0;
    double se = 0.0;
};

/// Pearson r with a paired-bootstrap standard error over `replicates` resamples.
[[nodiscard]] CorrelationEstimate bootstrap_corr(std::span<const double> x,
                                                 std::span<const double> y,
                                                 int replicates,
                                                 std::uint64_t seed);

} // namespace episodic
