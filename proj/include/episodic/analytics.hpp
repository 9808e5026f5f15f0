#pragma once

#include "episodic/clem.hpp"
#include "episodic/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace episodic {

struct BatchEntry {
    std::optional<FitResult> fit;
    std::string error;  // empty when the fit succeeded
};

/// Independent fits, one per dataset; a failing dataset is recorded and skipped.
[[nodiscard]] std::vector<BatchEntry> batch_fit(const std::vector<EventSequence>& datasets, const FitConfig& config);

struct HazardCurves {
    std::vector<double> grid;             // equispaced on [0, 1)
    Eigen::MatrixXd values;               // one row per hazard
    std::vector<double> average;          // int_0^1 lambda (quadrature)
    std::vector<double> trapezoid_average;  // periodic trapezoid rule on the grid
};

[[nodiscard]] HazardCurves hazard_curves(const std::vector<HazardSpec>& hazards, std::size_t grid_size = 96);

struct CurvePca {
    Eigen::VectorXd mean;
    Eigen::MatrixXd eigenfunctions;   // columns, unit discrete norm, nonnegative sum
    std::vector<double> eigenvalues;
    std::vector<double> explained;    // fractions of total variance; sum to 1
};

/// PCA of grid-sampled curves (rows). Components with zero variance are dropped,
/// so identical curves give no components.
[[nodiscard]] CurvePca curve_pca(const Eigen::MatrixXd& curves);

enum class Group { Low = 0, Medium = 1, High = 2 };

struct ThreeGroups {
    std::vector<Group> labels;
    std::array<double, 3> centers{};  // low, medium, high
    double objective = 0.0;           // within-group sum of squares
};

/// 1-D k-means with k = 3 (Lloyd iterations from `restarts` k-means++ seeds).
[[nodiscard]] ThreeGroups three_group_cluster(std::span<const double> metric, int restarts = 50,
                                              std::uint64_t seed = 7);

[[nodiscard]] std::string group_name(Group g);

/// Average daily parent hazard, expected posts per episode, expected episode length.
[[nodiscard]] DerivedQuantities derived_metrics(const FitResult& fit);

} // namespace episodic
