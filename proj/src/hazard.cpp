#include "episodic/hazard.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <string>

namespace episodic {

namespace detail {

const GaussLegendre16& gauss_legendre16() {
    static const GaussLegendre16 rule = [] {
        using Rule = boost::math::quadrature::gauss<double, 16>;
        const auto& x = Rule::abscissa();
        const auto& w = Rule::weights();
        GaussLegendre16 out{};
        std::size_t k = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            out.nodes[k] = 0.5 * (1.0 - x[i]);
            out.weights[k++] = 0.5 * w[i];
            out.nodes[k] = 0.5 * (1.0 + x[i]);
            out.weights[k++] = 0.5 * w[i];
        }
        return out;
    }();
    return rule;
}

} // namespace detail

namespace {

// Uniform cubic B-spline pieces on a unit knot interval, local coordinate u in [0, 1).
inline std::array<double, 4> cubic_pieces(double u) {
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double v = 1.0 - u;
    return {v * v * v / 6.0,
            (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
            (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0,
            u3 / 6.0};
}

inline double phase_of(double t) {
    return t - std::floor(t);
}

} // namespace

HazardSpec HazardSpec::sinusoidal(std::vector<double> beta) {
    if (beta.empty() || beta.size() % 2 == 0) {
        throw std::invalid_argument("sinusoidal hazard needs 1 + 2q coefficients, got " +
                                    std::to_string(beta.size()));
    }
    HazardSpec spec;
    spec.family = HazardFamily::Sinusoidal;
    spec.order = static_cast<int>((beta.size() - 1) / 2);
    spec.beta = std::move(beta);
    return spec;
}

HazardSpec HazardSpec::cyclic_bspline(int knots, std::vector<double> beta) {
    HazardSpec spec;
    spec.family = HazardFamily::CyclicBSpline;
    spec.order = knots;
    spec.beta = std::move(beta);
    spec.validate();
    return spec;
}

HazardSpec HazardSpec::constant(HazardFamily family, int order, double rate) {
    if (!(rate > 0.0)) {
        throw std::invalid_argument("constant hazard rate must be positive");
    }
    HazardSpec spec;
    spec.family = family;
    spec.order = order;
    spec.beta.assign(spec.dimension(), 0.0);
    if (family == HazardFamily::Sinusoidal) {
        spec.beta[0] = std::log(rate);
    } else {
        std::fill(spec.beta.begin(), spec.beta.end(), std::log(rate));
    }
    spec.validate();
    return spec;
}

std::size_t HazardSpec::dimension() const {
    return family == HazardFamily::Sinusoidal ? static_cast<std::size_t>(1 + 2 * order)
                                              : static_cast<std::size_t>(order);
}

void HazardSpec::validate() const {
    if (family == HazardFamily::Sinusoidal && order < 0) {
        throw std::invalid_argument("sinusoidal harmonic count must be nonnegative");
    }
    if (family == HazardFamily::CyclicBSpline && order < 3) {
        throw std::invalid_argument("cyclic B-spline hazard needs at least 3 knots");
    }
    if (beta.size() != dimension()) {
        throw std::invalid_argument("hazard coefficient length " + std::to_string(beta.size()) +
                                    " does not match expected " + std::to_string(dimension()));
    }
    for (double b : beta) {
        if (!std::isfinite(b)) {
            throw std::invalid_argument("hazard coefficients must be finite");
        }
    }
}

Hazard::Hazard(HazardSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    panels_ = spec_.family == HazardFamily::CyclicBSpline ? spec_.order : std::max(1, 4 * spec_.order);
    double total = 0.0;
    auto acc = [&](double x, double w) { total += w * (*this)(x); };
    within_period(0.0, 1.0, 1.0, acc);
    period_integral_ = total;
}

double Hazard::log_value(double t) const {
    const auto& b = spec_.beta;
    if (spec_.family == HazardFamily::Sinusoidal) {
        double eta = b[0];
        const double angle = 2.0 * std::numbers::pi * phase_of(t);
        for (int j = 1; j <= spec_.order; ++j) {
            eta += b[2 * j - 1] * std::cos(j * angle) + b[2 * j] * std::sin(j * angle);
        }
        return eta;
    }
    const int q = spec_.order;
    const double u = phase_of(t) * q;
    const int s = std::min(q - 1, static_cast<int>(u));
    const auto piece = cubic_pieces(u - s);
    double eta = 0.0;
    for (int k = 0; k < 4; ++k) {
        eta += b[static_cast<std::size_t>(((s - k) % q + q) % q)] * piece[static_cast<std::size_t>(3 - k)];
    }
    return eta;
}

void Hazard::basis(double t, std::span<double> out) const {
    if (out.size() != dimension()) {
        throw std::invalid_argument("basis output has wrong length");
    }
    std::fill(out.begin(), out.end(), 0.0);
    if (spec_.family == HazardFamily::Sinusoidal) {
        out[0] = 1.0;
        const double angle = 2.0 * std::numbers::pi * phase_of(t);
        for (int j = 1; j <= spec_.order; ++j) {
            out[static_cast<std::size_t>(2 * j - 1)] = std::cos(j * angle);
            out[static_cast<std::size_t>(2 * j)] = std::sin(j * angle);
        }
        return;
    }
    const int q = spec_.order;
    const double u = phase_of(t) * q;
    const int s = std::min(q - 1, static_cast<int>(u));
    const auto piece = cubic_pieces(u - s);
    for (int k = 0; k < 4; ++k) {
        out[static_cast<std::size_t>(((s - k) % q + q) % q)] += piece[static_cast<std::size_t>(3 - k)];
    }
}

double Hazard::integral(double a, double b) const {
    if (a > b) {
        throw std::invalid_argument("hazard integral requires a <= b");
    }
    if (a == b) {
        return 0.0;
    }
    const double fa = std::floor(a);
    const double fb = std::floor(b);
    double total = 0.0;
    auto acc = [&](double x, double w) { total += w * (*this)(x); };
    if (fa == fb) {
        within_period(a - fa, b - fb, 1.0, acc);
        return total;
    }
    within_period(a - fa, 1.0, 1.0, acc);
    within_period(0.0, b - fb, 1.0, acc);
    return total + (fb - fa - 1.0) * period_integral_;
}

double evaluate(const HazardSpec& spec, double t) {
    return Hazard(spec)(t);
}

double integrate(const HazardSpec& spec, double a, double b) {
    return Hazard(spec).integral(a, b);
}

namespace {

// Basis values at the points and at merged quadrature nodes.
struct ObjectiveTable {
    Eigen::VectorXd point_sum;
    Eigen::MatrixXd node_basis;  // one row per quadrature node
    Eigen::VectorXd node_weight;
};

ObjectiveTable tabulate(const HazardSpec& spec,
                        std::span<const WeightedPoint> points,
                        std::span<const WeightedInterval> exposure) {
    const Hazard hazard(spec);
    const auto p = static_cast<Eigen::Index>(hazard.dimension());
    ObjectiveTable table;
    table.point_sum = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd b(p);
    std::span<double> bspan(b.data(), static_cast<std::size_t>(p));
    for (const auto& pt : points) {
        if (pt.weight == 0.0) {
            continue;
        }
        hazard.basis(pt.time, bspan);
        table.point_sum += pt.weight * b;
    }
    std::unordered_map<double, std::size_t> index;
    std::vector<double> phases;
    std::vector<double> weights;
    for (const auto& iv : exposure) {
        if (iv.from > iv.to) {
            throw std::invalid_argument("exposure interval with from > to");
        }
        if (iv.weight == 0.0) {
            continue;
        }
        hazard.for_each_node(iv.from, iv.to, [&](double x, double w) {
            const auto [it, inserted] = index.try_emplace(x, phases.size());
            if (inserted) {
                phases.push_back(x);
                weights.push_back(0.0);
            }
            weights[it->second] += iv.weight * w;
        });
    }
    const auto n = static_cast<Eigen::Index>(phases.size());
    table.node_basis.resize(n, p);
    table.node_weight.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        hazard.basis(phases[static_cast<std::size_t>(i)], bspan);
        table.node_basis.row(i) = b.transpose();
        table.node_weight(i) = weights[static_cast<std::size_t>(i)];
    }
    return table;
}

HazardObjective evaluate_table(const ObjectiveTable& table, const std::vector<double>& beta, bool with_hessian) {
    const Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<Eigen::Index>(beta.size()));
    const Eigen::VectorXd wl = table.node_weight.cwiseProduct((table.node_basis * b).array().exp().matrix());
    HazardObjective out;
    out.value = b.dot(table.point_sum) - wl.sum();
    out.gradient = table.point_sum - table.node_basis.transpose() * wl;
    if (with_hessian) {
        out.hessian = -(table.node_basis.transpose() * wl.asDiagonal() * table.node_basis);
    }
    return out;
}

} // namespace

HazardObjective hazard_objective(const HazardSpec& spec,
                                 std::span<const WeightedPoint> points,
                                 std::span<const WeightedInterval> exposure,
                                 bool with_hessian) {
    spec.validate();
    return evaluate_table(tabulate(spec, points, exposure), spec.beta, with_hessian);
}

HazardFit maximize_hazard_objective(const HazardSpec& start,
                                    std::span<const WeightedPoint> points,
                                    std::span<const WeightedInterval> exposure,
                                    int max_iterations) {
    start.validate();
    const auto table = tabulate(start, points, exposure);
    HazardSpec current = start;
    auto obj = evaluate_table(table, current.beta, true);
    HazardFit fit{current.beta, obj.value, 0};
    for (int it = 0; it < max_iterations; ++it) {
        fit.iterations = it + 1;
        const Eigen::MatrixXd neg_h = -obj.hessian;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_h);
        Eigen::VectorXd step;
        if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.vectorD().minCoeff() > 1e-12) {
            step = ldlt.solve(obj.gradient);
        } else {
            const double ridge = 1e-8 * (1.0 + neg_h.diagonal().cwiseAbs().maxCoeff());
            step = (neg_h + ridge * Eigen::MatrixXd::Identity(neg_h.rows(), neg_h.cols()))
                       .ldlt()
                       .solve(obj.gradient);
        }
        const double decrement = obj.gradient.dot(step);
        if (!(decrement > 1e-13)) {
            if (decrement > 0.0) {
                HazardSpec trial = current;
                for (Eigen::Index j = 0; j < step.size(); ++j) {
                    trial.beta[static_cast<std::size_t>(j)] += step(j);
                }
                auto trial_obj = evaluate_table(table, trial.beta, true);
                if (std::isfinite(trial_obj.value) && trial_obj.value >= obj.value) {
                    fit.beta = trial.beta;
                    fit.objective = trial_obj.value;
                }
            }
            break;
        }
        double scale = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 60; ++halving, scale *= 0.5) {
            HazardSpec trial = current;
            for (Eigen::Index j = 0; j < step.size(); ++j) {
                trial.beta[static_cast<std::size_t>(j)] += scale * step(j);
            }
            auto trial_obj = evaluate_table(table, trial.beta, true);
            if (std::isfinite(trial_obj.value) && trial_obj.value >= obj.value) {
                current = std::move(trial);
                obj = std::move(trial_obj);
                improved = true;
                break;
            }
        }
        if (!improved) {
            break;
        }
        fit.beta = current.beta;
        fit.objective = obj.value;
    }
    return fit;
}

} // namespace episodic
