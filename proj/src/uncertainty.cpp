#include "episodic/uncertainty.hpp"

#include "episodic/numeric.hpp"
#include "episodic/parallel.hpp"
#include "episodic/simulator.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace episodic {

namespace {

void append_offspring_score(const OffspringLaw& law, std::size_t z, const WindowStats& stats,
                            std::vector<double>& out) {
    if (law.family == OffspringFamily::Exponential) {
        out.push_back(stats.expected_offspring[z] / law.rate - stats.expected_offspring_gap[z]);
        return;
    }
    const double k = law.shape;
    const double sigma = law.scale;
    CompensatedSum d_shape;
    CompensatedSum d_scale;
    for (const auto& g : stats.offspring_gaps[z]) {
        if (g.weight == 0.0) {
            continue;
        }
        const double r = std::log(g.gap / sigma);
        const double p = std::exp(k * r);  // (d / sigma)^k
        d_shape += g.weight * (1.0 / k + r - p * r);
        d_scale += g.weight * (k / sigma) * (p - 1.0);
    }
    out.push_back(d_shape.value());
    out.push_back(d_scale.value());
}

// d/dx [X log x - C x] with the 0 * log 0 convention.
double poisson_mean_score(double events, double count, double mean) {
    return (events > 0.0 ? events / mean : 0.0) - count;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, std::vector<std::string>& warnings) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double tol = 1e-12 * (sv.size() > 0 ? sv(0) : 0.0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    bool singular = false;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > tol) {
            inv(i) = 1.0 / sv(i);
        } else {
            singular = true;
        }
    }
    if (singular) {
        warnings.emplace_back("score Jacobian is numerically singular; using the pseudo-inverse");
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

VarianceEstimate finish(VarianceMethod method, Eigen::MatrixXd cov, std::vector<std::string> warnings) {
    cov = 0.5 * (cov + cov.transpose()).eval();
    VarianceEstimate out;
    out.method = method;
    out.standard_errors.resize(static_cast<std::size_t>(cov.rows()));
    for (Eigen::Index j = 0; j < cov.rows(); ++j) {
        if (cov(j, j) < 0.0) {
            warnings.emplace_back("negative variance for coordinate " + std::to_string(j) + "; clipped to zero");
            cov(j, j) = 0.0;
        }
        out.standard_errors[static_cast<std::size_t>(j)] = std::sqrt(cov(j, j));
    }
    out.covariance = std::move(cov);
    out.warnings = std::move(warnings);
    return out;
}

} // namespace

Eigen::VectorXd score_from_stats(const WindowStats& stats, const ModelParams& params) {
    std::vector<double> out;
    const double episodes = stats.expected_episodes;
    const double original = stats.expected_original_parents;
    out.push_back(original / params.alpha - (episodes - original) / (1.0 - params.alpha));
    out.push_back(poisson_mean_score(stats.expected_extra_segments, episodes, params.gamma));
    out.push_back(poisson_mean_score(stats.expected_extra_events[1], stats.expected_segments[1], params.mu1));
    out.push_back(poisson_mean_score(stats.expected_extra_events[0], stats.expected_segments[0], params.mu0));
    append_offspring_score(params.offspring1, 1, stats, out);
    append_offspring_score(params.offspring0, 0, stats, out);
    const auto hazard = hazard_objective(params.hazard, stats.parent_points, stats.exposure, false);
    for (Eigen::Index j = 0; j < hazard.gradient.size(); ++j) {
        out.push_back(hazard.gradient(j));
    }
    return Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Eigen::VectorXd window_score(const EventSequence& window, const ModelParams& params) {
    return score_from_stats(posterior_stats(window, params), params);
}

Eigen::VectorXd composite_score(const WindowPartition& partition, const ModelParams& params) {
    Eigen::VectorXd total;
    for (const auto& window : partition.windows) {
        const auto u = window_score(window, params);
        if (total.size() == 0) {
            total = u;
        } else {
            total += u;
        }
    }
    return total;
}

VarianceEstimate sandwich(const FitResult& fit, const WindowPartition& partition) {
    const ModelParams& theta = fit.params;
    const auto center = to_vector(theta);
    const auto p = static_cast<Eigen::Index>(center.size());
    const auto windows = static_cast<double>(partition.windows.size());
    const double s = partition.sub_window_length;
    std::vector<std::string> warnings;
    if (!fit.converged) {
        warnings.emplace_back("fit did not converge; sandwich evaluated at the last iterate");
    }
    {
        const auto names = parameter_names(theta);
        for (std::size_t j = 0; j < 4; ++j) {
            const double lower = j == 0 ? kAlphaClamp : kRateMin;
            const bool at_upper = j == 0 && center[j] >= 1.0 - kAlphaClamp;
            if (center[j] <= lower * (1.0 + 1e-9) || at_upper) {
                warnings.push_back(names[j] + " is at its boundary; its standard error is unreliable");
            }
        }
    }

    Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(p, p);
    for (const auto& window : partition.windows) {
        const auto u = window_score(window, theta);
        outer.noalias() += u * u.transpose();
    }

    // Jacobian of the summed score by central differences (forward at the boundary).
    Eigen::MatrixXd jacobian(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const double h = 1e-6 * (1.0 + std::abs(center[ju]));
        auto shifted = [&](double delta) {
            auto v = center;
            v[ju] += delta;
            return from_vector(v, theta);
        };
        bool central = true;
        ModelParams minus;
        try {
            minus = shifted(-h);
            minus.validate();
        } catch (const std::invalid_argument&) {
            central = false;
        }
        const auto up = composite_score(partition, shifted(h));
        if (central) {
            jacobian.col(j) = (up - composite_score(partition, minus)) / (2.0 * h);
        } else {
            jacobian.col(j) = (up - composite_score(partition, theta)) / h;
        }
    }
    jacobian = 0.5 * (jacobian + jacobian.transpose()).eval();

    const Eigen::MatrixXd i0 = jacobian / (s * windows);
    const Eigen::MatrixXd middle = outer / (s * s * windows);
    const Eigen::MatrixXd i0_inv = pseudo_inverse(i0, warnings);
    const Eigen::MatrixXd im_inv = i0_inv * middle * i0_inv.transpose();
    return finish(VarianceMethod::Sandwich, im_inv / windows, std::move(warnings));
}

SimulationCovariance simulation_cov(const FitResult& fit, double horizon, std::span<const std::uint64_t> seeds) {
    if (seeds.size() < 2) {
        throw std::invalid_argument("simulation covariance needs at least two replicates");
    }
    FitConfig config = fit.config;
    config.initial = fit.params;
    config.starts = 1;
    std::vector<std::optional<std::vector<double>>> estimates(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t r) {
        try {
            const auto sim = simulate(fit.params, horizon, seeds[r]);
            estimates[r] = to_vector(episodic::fit(sim.events, config).params);
        } catch (const std::exception&) {
            estimates[r].reset();
        }
    });
    SimulationCovariance out;
    for (auto& e : estimates) {
        if (e) {
            out.replicate_estimates.push_back(std::move(*e));
        } else {
            ++out.failed_replicates;
        }
    }
    if (out.failed_replicates * 5 > static_cast<int>(seeds.size())) {
        throw std::runtime_error(std::to_string(out.failed_replicates) + " of " + std::to_string(seeds.size()) +
                                 " replicate fits failed");
    }
    const auto w = static_cast<Eigen::Index>(out.replicate_estimates.size());
    if (w < 2) {
        throw std::runtime_error("fewer than two successful replicate fits");
    }
    const auto p = static_cast<Eigen::Index>(out.replicate_estimates.front().size());
    Eigen::MatrixXd x(w, p);
    for (Eigen::Index r = 0; r < w; ++r) {
        for (Eigen::Index j = 0; j < p; ++j) {
            x(r, j) = out.replicate_estimates[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
        }
    }
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    std::vector<std::string> warnings;
    if (out.failed_replicates > 0) {
        warnings.emplace_back(std::to_string(out.failed_replicates) + " replicate fits failed and were excluded");
    }
    out.estimate = finish(VarianceMethod::SimulationCov, centered.transpose() * centered / static_cast<double>(w - 1),
                          std::move(warnings));
    return out;
}

SimulationCovariance simulation_cov(const FitResult& fit, double horizon, int replicates, std::uint64_t seed) {
    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < replicates; ++r) {
        seeds.push_back(mix_seed(seed, static_cast<std::uint64_t>(r)));
    }
    return simulation_cov(fit, horizon, seeds);
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("correlation needs paired samples of length >= 2");
    }
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        throw std::invalid_argument("correlation undefined: zero variance");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationEstimate bootstrap_corr(std::span<const double> x, std::span<const double> y, int replicates,
                                   std::uint64_t seed) {
    if (x.size() != y.size() || x.size() < 3) {
        throw std::invalid_argument("bootstrap correlation needs paired samples of length >= 3");
    }
    CorrelationEstimate out;
    out.r = pearson(x, y);
    if (replicates < 2) {
        return out;
    }
    auto rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
    std::vector<double> bx(x.size());
    std::vector<double> by(y.size());
    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(replicates));
    for (int b = 0; b < replicates; ++b) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const std::size_t k = pick(rng);
            bx[i] = x[k];
            by[i] = y[k];
        }
        double r = 0.0;
        try {
            r = pearson(bx, by);
        } catch (const std::invalid_argument&) {
            continue;  // degenerate resample
        }
        draws.push_back(r);
    }
    if (draws.size() >= 2) {
        CompensatedSum sum;
        for (double r : draws) {
            sum += r;
        }
        const double mean = sum.value() / static_cast<double>(draws.size());
        CompensatedSum dev;
        for (double r : draws) {
            dev += (r - mean) * (r - mean);
        }
        out.se = std::sqrt(dev.value() / static_cast<double>(draws.size() - 1));
    }
    return out;
}

} // namespace episodic
