#include "episodic/direct.hpp"

#include "episodic/uncertainty.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace episodic {

namespace {

// Number of leading coordinates after alpha that are log-transformed.
std::size_t positive_count(const ModelParams& layout) {
    return 3 + layout.offspring1.dimension() + layout.offspring0.dimension();
}

struct Problem {
    const WindowPartition* partition;
    ModelParams layout;
    int evaluations = 0;
};

constexpr double kPenalty = 1e300;

bool decode(const gsl_vector* x, const Problem& p, ModelParams& out) {
    std::vector<double> u(x->size);
    for (std::size_t i = 0; i < x->size; ++i) {
        u[i] = gsl_vector_get(x, i);
        if (!std::isfinite(u[i])) {
            return false;
        }
    }
    try {
        out = from_unconstrained(u, p.layout);
        out.validate();
    } catch (const std::invalid_argument&) {
        return false;
    }
    return true;
}

double negative_loglik(const gsl_vector* x, void* data) {
    auto& p = *static_cast<Problem*>(data);
    ++p.evaluations;
    ModelParams theta;
    if (!decode(x, p, theta)) {
        return kPenalty;
    }
    const double ll = composite_loglik(*p.partition, theta);
    return std::isfinite(ll) ? -ll : kPenalty;
}

void negative_gradient(const gsl_vector* x, void* data, gsl_vector* g) {
    auto& p = *static_cast<Problem*>(data);
    ModelParams theta;
    if (!decode(x, p, theta)) {
        gsl_vector_set_zero(g);
        return;
    }
    const Eigen::VectorXd score = composite_score(*p.partition, theta);
    const auto values = to_vector(theta);
    const std::size_t positive = positive_count(p.layout);
    for (std::size_t i = 0; i < values.size(); ++i) {
        double chain = 1.0;
        if (i == 0) {
            chain = values[0] * (1.0 - values[0]);
        } else if (i <= positive) {
            chain = values[i];
        }
        const double gi = -score(static_cast<Eigen::Index>(i)) * chain;
        gsl_vector_set(g, i, std::isfinite(gi) ? gi : 0.0);
    }
}

void both(const gsl_vector* x, void* data, double* f, gsl_vector* g) {
    *f = negative_loglik(x, data);
    negative_gradient(x, data, g);
}

} // namespace

std::vector<double> to_unconstrained(const ModelParams& params) {
    auto v = to_vector(params);
    const std::size_t positive = positive_count(params);
    v[0] = std::log(v[0] / (1.0 - v[0]));
    for (std::size_t i = 1; i <= positive; ++i) {
        v[i] = std::log(std::max(v[i], 1e-300));
    }
    return v;
}

ModelParams from_unconstrained(std::span<const double> u, const ModelParams& layout) {
    std::vector<double> v(u.begin(), u.end());
    const std::size_t positive = positive_count(layout);
    v[0] = 1.0 / (1.0 + std::exp(-v[0]));
    for (std::size_t i = 1; i <= positive; ++i) {
        v[i] = std::exp(v[i]);
    }
    return from_vector(v, layout);
}

DirectResult direct_maximize(const WindowPartition& partition, const ModelParams& start, int max_iterations,
                             double gradient_tolerance) {
    start.validate();
    Problem problem{&partition, start};
    const auto u0 = to_unconstrained(start);
    const std::size_t n = u0.size();

    gsl_set_error_handler_off();
    gsl_vector* x = gsl_vector_alloc(n);
    for (std::size_t i = 0; i < n; ++i) {
        gsl_vector_set(x, i, u0[i]);
    }
    gsl_multimin_function_fdf fdf;
    fdf.n = n;
    fdf.f = &negative_loglik;
    fdf.df = &negative_gradient;
    fdf.fdf = &both;
    fdf.params = &problem;

    gsl_multimin_fdfminimizer* solver = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n);
    gsl_multimin_fdfminimizer_set(solver, &fdf, x, 0.01, 0.1);

    DirectResult out;
    int status = GSL_CONTINUE;
    for (out.iterations = 0; out.iterations < max_iterations && status == GSL_CONTINUE;) {
        ++out.iterations;
        status = gsl_multimin_fdfminimizer_iterate(solver);
        if (status != GSL_SUCCESS) {
            break;
        }
        status = gsl_multimin_test_gradient(solver->gradient, gradient_tolerance);
    }
    out.converged = gsl_multimin_test_gradient(solver->gradient, gradient_tolerance) == GSL_SUCCESS;
    out.status = gsl_strerror(status);

    ModelParams theta;
    if (decode(solver->x, problem, theta)) {
        out.params = theta;
        out.loglik = -solver->f;
    } else {
        out.params = start;
        out.loglik = -std::numeric_limits<double>::infinity();
        out.converged = false;
    }
    gsl_multimin_fdfminimizer_free(solver);
    gsl_vector_free(x);
    return out;
}

} // namespace episodic
