#include <doctest.h>

#include "support.hpp"

#include <numbers>

using namespace episodic;

namespace {

// Composite Simpson on a panel grid, halving panels until the estimate settles.
double refined_integral(const HazardSpec& spec, double a, double b) {
    auto simpson = [&](int panels) {
        const double h = (b - a) / panels;
        double sum = 0.0;
        for (int k = 0; k < panels; ++k) {
            const double x0 = a + k * h;
            sum += h / 6.0 * (evaluate(spec, x0) + 4.0 * evaluate(spec, x0 + h / 2) + evaluate(spec, x0 + h));
        }
        return sum;
    };
    int panels = 8;
    double previous = simpson(panels);
    while (panels < (1 << 20)) {
        panels *= 2;
        const double next = simpson(panels);
        if (std::abs(next - previous) < 1e-12 * std::max(1.0, std::abs(next))) {
            return next;
        }
        previous = next;
    }
    return previous;
}

} // namespace

TEST_CASE("constant sinusoidal hazard") {
    const auto spec = HazardSpec::sinusoidal({0.7, 0.0, 0.0});
    for (double t : {0.0, 0.13, 0.5, 3.9}) {
        CHECK(evaluate(spec, t) == doctest::Approx(std::exp(0.7)).epsilon(1e-14));
    }
    CHECK(integrate(spec, 0.3, 2.45) == doctest::Approx(std::exp(0.7) * 2.15).epsilon(1e-13));
}

TEST_CASE("constant B-spline coefficients give a constant hazard") {
    const auto spec = HazardSpec::cyclic_bspline(7, std::vector<double>(7, -0.4));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (int i = 0; i < 50; ++i) {
        CHECK(evaluate(spec, u(rng)) == doctest::Approx(std::exp(-0.4)).epsilon(1e-13));
    }
}

TEST_CASE("B-spline basis is a nonnegative partition of unity and wraps at midnight") {
    for (int knots : {3, 5, 7, 12}) {
        const Hazard h(HazardSpec::cyclic_bspline(knots, std::vector<double>(static_cast<std::size_t>(knots), 0.0)));
        std::vector<double> b(static_cast<std::size_t>(knots));
        std::vector<double> c(static_cast<std::size_t>(knots));
        for (int i = 0; i <= 200; ++i) {
            const double t = i / 200.0;
            h.basis(t, b);
            h.basis(t + 2.0, c);
            double sum = 0.0;
            for (std::size_t k = 0; k < b.size(); ++k) {
                CHECK(b[k] >= -1e-15);
                CHECK(b[k] == doctest::Approx(c[k]).epsilon(1e-12));
                sum += b[k];
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
        }
        // continuity across the day boundary
        h.basis(1.0 - 1e-9, b);
        h.basis(0.0, c);
        for (std::size_t k = 0; k < b.size(); ++k) {
            CHECK(std::abs(b[k] - c[k]) < 1e-8);
        }
    }
}

TEST_CASE("sinusoidal hazard hand value") {
    const auto spec = HazardSpec::sinusoidal({-2.0, -2.0, 2.0});
    CHECK(evaluate(spec, 0.25) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(evaluate(spec, 0.0) == doctest::Approx(std::exp(-4.0)).epsilon(1e-14));
    CHECK(evaluate(spec, 7.25) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(HazardSpec::sinusoidal({1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(HazardSpec::cyclic_bspline(2, {0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(HazardSpec::cyclic_bspline(5, {0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)integrate(HazardSpec::sinusoidal({0.0}), 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("integral matches an adaptive refinement oracle") {
    CHECK(integrate(HazardSpec::sinusoidal({-2.0, -2.0, 2.0}), 0.0, 1.0) ==
          doctest::Approx(refined_integral(HazardSpec::sinusoidal({-2.0, -2.0, 2.0}), 0.0, 1.0)).epsilon(1e-11));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const auto spec = testing::random_hazard(rng, i % 2 ? HazardFamily::Sinusoidal : HazardFamily::CyclicBSpline);
        const double a = 3.0 * u(rng);
        const double b = a + 2.5 * u(rng);
        CHECK(integrate(spec, a, b) == doctest::Approx(refined_integral(spec, a, b)).epsilon(1e-10));
    }
}

TEST_CASE("integral is periodic and additive") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const auto spec = testing::random_hazard(rng, i % 2 ? HazardFamily::Sinusoidal : HazardFamily::CyclicBSpline);
        const Hazard h(spec);
        const double a = 4.0 * u(rng);
        const int k = 1 + i % 4;
        CHECK(h.integral(a, a + k) == doctest::Approx(k * h.period_integral()).epsilon(1e-12));
        const double b = a + 3.0 * u(rng);
        const double c = b + 3.0 * u(rng);
        CHECK(h.integral(a, b) + h.integral(b, c) == doctest::Approx(h.integral(a, c)).epsilon(1e-12));
        CHECK(h(a) == doctest::Approx(h(a + 1.0)).epsilon(1e-12));
        CHECK(h.integral(a, a) == 0.0);
    }
}

TEST_CASE("hazard objective derivatives match finite differences") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int draw = 0; draw < 20; ++draw) {
        const auto spec =
            testing::random_hazard(rng, draw % 2 ? HazardFamily::Sinusoidal : HazardFamily::CyclicBSpline);
        std::vector<WeightedPoint> points;
        std::vector<WeightedInterval> exposure;
        double t = 0.0;
        for (int i = 0; i < 15; ++i) {
            const double next = t + 0.4 * u(rng);
            points.push_back({next, u(rng)});
            exposure.push_back({t, next, points.back().weight});
            t = next;
        }
        exposure.push_back({t, t + 1.7, 1.0});
        const auto obj = hazard_objective(spec, points, exposure, true);
        const std::size_t p = spec.beta.size();
        for (std::size_t j = 0; j < p; ++j) {
            const double h = 1e-6;
            auto up = spec;
            auto down = spec;
            up.beta[j] += h;
            down.beta[j] -= h;
            const auto fu = hazard_objective(up, points, exposure, true);
            const auto fd = hazard_objective(down, points, exposure, true);
            const double fd_grad = (fu.value - fd.value) / (2 * h);
            const auto jj = static_cast<Eigen::Index>(j);
            CHECK(std::abs(fd_grad - obj.gradient(jj)) <= 1e-6 * std::max(1.0, std::abs(obj.gradient(jj))));
            const Eigen::VectorXd fd_hess = (fu.gradient - fd.gradient) / (2 * h);
            for (std::size_t k = 0; k < p; ++k) {
                const auto kk = static_cast<Eigen::Index>(k);
                CHECK(std::abs(fd_hess(kk) - obj.hessian(kk, jj)) <=
                      1e-5 * std::max(1.0, std::abs(obj.hessian(kk, jj))));
            }
        }
        // concavity
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(obj.hessian);
        CHECK(es.eigenvalues().maxCoeff() <= 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("zero point weights leave only the tail in the gradient") {
    const auto spec = HazardSpec::sinusoidal({0.2, 0.5, -0.3});
    std::vector<WeightedPoint> points{{0.4, 0.0}, {0.9, 0.0}};
    std::vector<WeightedInterval> exposure{{0.0, 0.4, 0.0}, {0.4, 0.9, 0.0}, {0.9, 2.0, 1.0}};
    const auto obj = hazard_objective(spec, points, exposure, false);
    // d/d beta0 of -int lambda is -int lambda
    CHECK(obj.gradient(0) == doctest::Approx(-integrate(spec, 0.9, 2.0)).epsilon(1e-12));
    CHECK(obj.value == doctest::Approx(-integrate(spec, 0.9, 2.0)).epsilon(1e-12));
}

TEST_CASE("constant family maximizer is the weighted exponential MLE") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<WeightedPoint> points;
    std::vector<WeightedInterval> exposure;
    double t = 0.0;
    double weight_sum = 0.0;
    double exposure_sum = 0.0;
    for (int i = 0; i < 40; ++i) {
        const double gap = -std::log(u(rng)) / 3.0;
        const double w = u(rng);
        points.push_back({t + gap, w});
        exposure.push_back({t, t + gap, w});
        weight_sum += w;
        exposure_sum += w * gap;
        t += gap;
    }
    const auto fit = maximize_hazard_objective(HazardSpec::sinusoidal({0.0}), points, exposure);
    CHECK(std::exp(fit.beta[0]) == doctest::Approx(weight_sum / exposure_sum).epsilon(1e-10));
    // the same optimum reached inside a richer family
    const auto rich = maximize_hazard_objective(HazardSpec::constant(HazardFamily::CyclicBSpline, 5, 1.0), points,
                                                exposure);
    CHECK(rich.objective >= fit.objective - 1e-9);
}

TEST_CASE("Newton ascent never decreases the objective") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<WeightedPoint> points;
    std::vector<WeightedInterval> exposure;
    double t = 0.0;
    for (int i = 0; i < 30; ++i) {
        const double next = t + u(rng);
        points.push_back({next, 1.0});
        exposure.push_back({t, next, 1.0});
        t = next;
    }
    auto start = HazardSpec::sinusoidal({3.0, -4.0, 5.0});
    const double before = hazard_objective(start, points, exposure, false).value;
    const auto fit = maximize_hazard_objective(start, points, exposure);
    CHECK(fit.objective >= before);
    auto at = start;
    at.beta = fit.beta;
    CHECK(hazard_objective(at, points, exposure, false).gradient.norm() < 1e-6);
}
