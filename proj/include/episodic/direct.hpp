#pragma once

#include "episodic/model.hpp"
#include "episodic/window_likelihood.hpp"

#include <string>

namespace episodic {

struct DirectResult {
    ModelParams params;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string status;
};

/// Maximizes the composite log-likelihood directly with BFGS on unconstrained
/// coordinates (logit alpha, log of the positive parameters, raw beta). The
/// gradient is the summed window score.
[[nodiscard]] DirectResult direct_maximize(const WindowPartition& partition,
                                           const ModelParams& start,
                                           int max_iterations = 2000,
                                           double gradient_tolerance = 1e-4);

/// Unconstrained coordinates used by direct_maximize, and their inverse.
[[nodiscard]] std::vector<double> to_unconstrained(const ModelParams& params);
[[nodiscard]] ModelParams from_unconstrained(std::span<const double> u, const ModelParams& layout);

} // namespace episodic
