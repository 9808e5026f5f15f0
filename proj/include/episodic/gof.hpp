#pragma once

#include "episodic/clem.hpp"
#include "episodic/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace episodic {

/// Right-continuous step CDF F(v) = (sum_i w_i I(x_i < v)) / sum_i w_i.
class StepCdf {
public:
    StepCdf() = default;
    explicit StepCdf(std::vector<double> values);
    StepCdf(std::vector<double> values, std::vector<double> weights);

    [[nodiscard]] double operator()(double v) const;
    [[nodiscard]] std::vector<double> evaluate(std::span<const double> grid) const;
    [[nodiscard]] double total_weight() const noexcept { return total_; }
    [[nodiscard]] double squared_weight() const noexcept { return total_sq_; }
    [[nodiscard]] bool empty() const noexcept { return values_.empty(); }

private:
    std::vector<double> values_;      // sorted
    std::vector<double> cumulative_;  // cumulative weight up to and including index
    double total_ = 0.0;
    double total_sq_ = 0.0;
};

[[nodiscard]] StepCdf empirical_gap_cdf(const EventSequence& events);

/// `points` quantile-spaced values of the observed gaps (including min and max).
[[nodiscard]] std::vector<double> default_v_grid(const EventSequence& events, std::size_t points = 200);

struct Envelope {
    std::vector<double> v;
    std::vector<double> observed;  // F-hat
    std::vector<double> mean;      // F-bar
    std::vector<double> upper;     // U
    std::vector<double> lower;     // L
    int empty_replicates = 0;      // replicates with no events (CDF taken as 0)
};

[[nodiscard]] Envelope envelope(const EventSequence& events,
                                const ModelParams& params,
                                int replicates,
                                std::span<const double> v_grid,
                                std::uint64_t seed);

struct CdfComparison {
    std::vector<double> v;
    std::vector<double> empirical;
    std::vector<double> model;
    std::vector<double> ci_lower;
    std::vector<double> ci_upper;
};

/// Posterior-weighted offspring gap CDF for mark z (weights pi_{l0} I(x_l = z)),
/// against the fitted offspring law. The band is +-1.96 SE from the variance of a
/// weighted indicator mean with independent gaps, evaluated at the model CDF.
[[nodiscard]] CdfComparison offspring_cdf_check(const EventSequence& events,
                                                const FitResult& fit,
                                                int mark,
                                                std::span<const double> v_grid);

/// Time-rescaled gaps int_{t_{l-1}}^{t_l} lambda-hat, weighted by pi_{l1}, against Exp(1).
[[nodiscard]] CdfComparison rescaled_parent_check(const EventSequence& events,
                                                  const FitResult& fit,
                                                  std::span<const double> v_grid);

/// Rescaled gaps Lambda(t_{l-1}, t_l) using each window's left edge as t_0.
[[nodiscard]] std::vector<double> rescaled_gaps(const EventSequence& events,
                                                const HazardSpec& hazard,
                                                double sub_window_length);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against Exp(1), asymptotic p-value.
[[nodiscard]] KsResult ks_test_unit_exponential(std::span<const double> sample);

} // namespace episodic
