#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace episodic {

enum class HazardFamily { Sinusoidal, CyclicBSpline };

/// Parametric parent hazard with a one-day period.
///
/// Sinusoidal: log lambda(t) = b0 + sum_j [b_j1 cos(2 pi j t) + b_j2 sin(2 pi j t)],
/// with `order` harmonics and 1 + 2*order coefficients.
/// CyclicBSpline: log lambda(t) = sum_i b_i B_i(t - floor(t)) over `order` cubic
/// basis functions on equally spaced knots that wrap at midnight; one coefficient
/// per knot and no separate intercept (the basis sums to one).
struct HazardSpec {
    HazardFamily family = HazardFamily::Sinusoidal;
    int order = 0;
    std::vector<double> beta{0.0};

    static HazardSpec sinusoidal(std::vector<double> beta);
    static HazardSpec cyclic_bspline(int knots, std::vector<double> beta);
    /// Constant hazard `rate` expressed in the given family and order.
    static HazardSpec constant(HazardFamily family, int order, double rate);

    [[nodiscard]] std::size_t dimension() const;
    void validate() const;
};

struct WeightedPoint {
    double time;
    double weight;
};

struct WeightedInterval {
    double from;
    double to;
    double weight;
};

/// Evaluator for a validated HazardSpec. Caches the one-period integral, so
/// construct once and reuse across many integrals.
class Hazard {
public:
    explicit Hazard(HazardSpec spec);

    [[nodiscard]] const HazardSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::size_t dimension() const noexcept { return spec_.beta.size(); }

    [[nodiscard]] double log_value(double t) const;
    [[nodiscard]] double operator()(double t) const { return std::exp(log_value(t)); }

    /// Basis vector B(t) such that log lambda(t) = beta . B(t).
    void basis(double t, std::span<double> out) const;

    [[nodiscard]] double integral(double a, double b) const;
    [[nodiscard]] double period_integral() const noexcept { return period_integral_; }

    /// Calls fn(phase, weight) for every quadrature node covering [a, b], where
    /// phase is in [0, 1). Whole periods are visited once with scaled weights.
    template <class Fn>
    void for_each_node(double a, double b, Fn&& fn) const;

private:
    template <class Fn>
    void within_period(double x0, double x1, double scale, Fn& fn) const;

    HazardSpec spec_;
    int panels_;
    double period_integral_ = 0.0;
};

namespace detail {
struct GaussLegendre16 {
    std::array<double, 16> nodes;    // on [0, 1]
    std::array<double, 16> weights;  // sum to 1
};
const GaussLegendre16& gauss_legendre16();
} // namespace detail

template <class Fn>
void Hazard::within_period(double x0, double x1, double scale, Fn& fn) const {
    if (x1 <= x0) {
        return;
    }
    const auto& rule = detail::gauss_legendre16();
    const double width = 1.0 / panels_;
    const int first = std::max(0, static_cast<int>(std::floor(x0 * panels_)));
    const int last = std::min(panels_ - 1, static_cast<int>(std::ceil(x1 * panels_)) - 1);
    for (int k = first; k <= last; ++k) {
        const double lo = std::max(x0, k * width);
        const double hi = std::min(x1, (k + 1) * width);
        if (hi <= lo) {
            continue;
        }
        const double len = hi - lo;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            fn(lo + len * rule.nodes[i], scale * len * rule.weights[i]);
        }
    }
}

template <class Fn>
void Hazard::for_each_node(double a, double b, Fn&& fn) const {
    if (b <= a) {
        return;
    }
    const double fa = std::floor(a);
    const double fb = std::floor(b);
    const double xa = a - fa;
    const double xb = b - fb;
    if (fa == fb) {
        within_period(xa, xb, 1.0, fn);
        return;
    }
    within_period(xa, 1.0, 1.0, fn);
    const double whole = fb - fa - 1.0;
    if (whole > 0.0) {
        within_period(0.0, 1.0, whole, fn);
    }
    within_period(0.0, xb, 1.0, fn);
}

[[nodiscard]] double evaluate(const HazardSpec& spec, double t);
[[nodiscard]] double integrate(const HazardSpec& spec, double a, double b);

/// Value, gradient and Hessian in beta of
///   sum_p w_p log lambda(t_p) - sum_i w_i int_{from_i}^{to_i} lambda(t) dt.
/// The Hessian is minus a weighted Gram integral, so the objective is concave.
struct HazardObjective {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

[[nodiscard]] HazardObjective hazard_objective(const HazardSpec& spec,
                                               std::span<const WeightedPoint> points,
                                               std::span<const WeightedInterval> exposure,
                                               bool with_hessian = true);

/// Newton ascent on hazard_objective with step halving, warm-started at
/// spec.beta. Never returns coefficients with a lower objective than the start.
struct HazardFit {
    std::vector<double> beta;
    double objective = 0.0;
    int iterations = 0;
};

[[nodiscard]] HazardFit maximize_hazard_objective(const HazardSpec& start,
                                                  std::span<const WeightedPoint> points,
                                                  std::span<const WeightedInterval> exposure,
                                                  int max_iterations = 50);

} // namespace episodic
