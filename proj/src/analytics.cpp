#include "episodic/analytics.hpp"

#include "episodic/numeric.hpp"
#include "episodic/parallel.hpp"
#include "episodic/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace episodic {

std::vector<BatchEntry> batch_fit(const std::vector<EventSequence>& datasets, const FitConfig& config) {
    std::vector<BatchEntry> out(datasets.size());
    parallel_for(datasets.size(), [&](std::size_t i) {
        try {
            out[i].fit = fit(datasets[i], config);
        } catch (const std::exception& e) {
            out[i].error = e.what();
        }
    });
    return out;
}

HazardCurves hazard_curves(const std::vector<HazardSpec>& hazards, std::size_t grid_size) {
    if (grid_size < 2) {
        throw std::invalid_argument("hazard curve grid needs at least 2 points");
    }
    HazardCurves out;
    for (std::size_t k = 0; k < grid_size; ++k) {
        out.grid.push_back(static_cast<double>(k) / static_cast<double>(grid_size));
    }
    out.values.resize(static_cast<Eigen::Index>(hazards.size()), static_cast<Eigen::Index>(grid_size));
    for (std::size_t i = 0; i < hazards.size(); ++i) {
        const Hazard lambda(hazards[i]);
        double sum = 0.0;
        for (std::size_t k = 0; k < grid_size; ++k) {
            const double v = lambda(out.grid[k]);
            out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
            sum += v;
        }
        out.average.push_back(lambda.period_integral());
        out.trapezoid_average.push_back(sum / static_cast<double>(grid_size));
    }
    return out;
}

CurvePca curve_pca(const Eigen::MatrixXd& curves) {
    if (curves.rows() < 2) {
        throw std::invalid_argument("curve PCA needs at least two curves");
    }
    CurvePca out;
    out.mean = curves.colwise().mean().transpose();
    const Eigen::MatrixXd centered = curves.rowwise() - out.mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(curves.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    const auto& values = solver.eigenvalues();  // ascending
    const double scale = std::max(cov.trace(), 0.0);
    std::vector<Eigen::Index> kept;
    for (Eigen::Index k = values.size(); k-- > 0;) {
        if (values(k) > 1e-12 * scale && values(k) > 0.0) {
            kept.push_back(k);
        }
    }
    out.eigenfunctions.resize(cov.rows(), static_cast<Eigen::Index>(kept.size()));
    double total = 0.0;
    for (auto k : kept) {
        total += values(k);
    }
    for (std::size_t c = 0; c < kept.size(); ++c) {
        Eigen::VectorXd phi = solver.eigenvectors().col(kept[c]);
        phi.normalize();
        if (phi.sum() < 0.0) {
            phi = -phi;
        }
        out.eigenfunctions.col(static_cast<Eigen::Index>(c)) = phi;
        out.eigenvalues.push_back(values(kept[c]));
        out.explained.push_back(values(kept[c]) / total);
    }
    return out;
}

namespace {

double within_ss(std::span<const double> x, const std::array<double, 3>& centers, std::vector<int>& assign) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < 3; ++c) {
            const double d = (x[i] - centers[static_cast<std::size_t>(c)]) * (x[i] - centers[static_cast<std::size_t>(c)]);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        assign[i] = best;
        total += best_d;
    }
    return total;
}

} // namespace

ThreeGroups three_group_cluster(std::span<const double> metric, int restarts, std::uint64_t seed) {
    if (metric.size() < 3) {
        throw std::invalid_argument("three-group clustering needs at least 3 values");
    }
    if (std::set<double>(metric.begin(), metric.end()).size() < 3) {
        throw std::invalid_argument("three-group clustering needs at least 3 distinct values");
    }
    // Sorting first makes the result independent of the input order.
    std::vector<double> x(metric.begin(), metric.end());
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    auto rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    std::array<double, 3> best_centers{};
    double best_objective = std::numeric_limits<double>::infinity();
    std::vector<int> assign(n);
    for (int r = 0; r < std::max(1, restarts); ++r) {
        // k-means++ seeding
        std::array<double, 3> centers{};
        centers[0] = x[pick(rng)];
        for (std::size_t c = 1; c < 3; ++c) {
            std::vector<double> d2(n);
            for (std::size_t i = 0; i < n; ++i) {
                double m = std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < c; ++k) {
                    m = std::min(m, (x[i] - centers[k]) * (x[i] - centers[k]));
                }
                d2[i] = m;
            }
            std::discrete_distribution<std::size_t> draw(d2.begin(), d2.end());
            centers[c] = x[draw(rng)];
        }
        double objective = within_ss(x, centers, assign);
        for (int it = 0; it < 1000; ++it) {
            std::array<double, 3> sum{};
            std::array<int, 3> count{};
            for (std::size_t i = 0; i < n; ++i) {
                sum[static_cast<std::size_t>(assign[i])] += x[i];
                ++count[static_cast<std::size_t>(assign[i])];
            }
            for (std::size_t c = 0; c < 3; ++c) {
                if (count[c] > 0) {
                    centers[c] = sum[c] / count[c];
                } else {
                    // empty cluster: move it to the worst-served point
                    std::size_t far = 0;
                    double far_d = -1.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        const double d = std::abs(x[i] - centers[static_cast<std::size_t>(assign[i])]);
                        if (d > far_d) {
                            far_d = d;
                            far = i;
                        }
                    }
                    centers[c] = x[far];
                }
            }
            const double next = within_ss(x, centers, assign);
            if (!(next < objective - 1e-15 * std::max(1.0, objective))) {
                objective = std::min(objective, next);
                break;
            }
            objective = next;
        }
        if (objective < best_objective) {
            best_objective = objective;
            best_centers = centers;
        }
    }
    std::sort(best_centers.begin(), best_centers.end());
    ThreeGroups out;
    out.centers = best_centers;
    std::vector<int> labels(metric.size());
    out.objective = within_ss(metric, best_centers, labels);
    for (int l : labels) {
        out.labels.push_back(static_cast<Group>(l));
    }
    return out;
}

std::string group_name(Group g) {
    switch (g) {
    case Group::Low:
        return "low";
    case Group::Medium:
        return "medium";
    case Group::High:
        return "high";
    }
    return "unknown";
}

DerivedQuantities derived_metrics(const FitResult& fit) {
    return derived_quantities(fit.params);
}

} // namespace episodic
