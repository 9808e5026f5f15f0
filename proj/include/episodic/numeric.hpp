#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace episodic {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow; either argument may be -inf.
[[nodiscard]] inline double log_add_exp(double a, double b) {
    if (a == kNegInf) {
        return b;
    }
    if (b == kNegInf) {
        return a;
    }
    return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

[[nodiscard]] inline double log_sum_exp(std::span<const double> values) {
    double peak = kNegInf;
    for (double v : values) {
        peak = std::max(peak, v);
    }
    if (peak == kNegInf) {
        return kNegInf;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += std::exp(v - peak);
    }
    return peak + std::log(sum);
}

/// log of the Poisson(mean) pmf at k, with 0^0 = 1 so that k = 0 is valid at mean 0.
[[nodiscard]] inline double log_poisson_pmf(int k, double mean) {
    if (k == 0) {
        return -mean;
    }
    if (mean <= 0.0) {
        return kNegInf;
    }
    return k * std::log(mean) - mean - std::lgamma(static_cast<double>(k) + 1.0);
}

/// Neumaier compensated accumulator; result is insensitive to summation order
/// well below double rounding of the total.
class CompensatedSum {
public:
    CompensatedSum& operator+=(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
        return *this;
    }

    [[nodiscard]] double value() const { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

/// SplitMix64 finalizer; used to derive independent stream seeds from a base seed.
[[nodiscard]] inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace episodic
