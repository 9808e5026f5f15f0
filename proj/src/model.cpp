#include "episodic/model.hpp"

#include "episodic/numeric.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace episodic {

EventSequence::EventSequence(double window_start, double window_end, std::vector<double> times, std::vector<int> marks)
    : window_start_(window_start), window_end_(window_end), times_(std::move(times)), marks_(std::move(marks)) {
    if (!std::isfinite(window_start_) || !std::isfinite(window_end_) || window_end_ < window_start_) {
        throw std::invalid_argument("event window must be finite with start <= end");
    }
    if (times_.size() != marks_.size()) {
        throw std::invalid_argument("times and marks differ in length");
    }
    for (std::size_t l = 0; l < times_.size(); ++l) {
        if (!std::isfinite(times_[l])) {
            throw std::invalid_argument("event time " + std::to_string(l) + " is not finite");
        }
        if (marks_[l] != kOriginal && marks_[l] != kRepost) {
            throw std::invalid_argument("event mark " + std::to_string(l) + " must be 0 or 1");
        }
        if (l > 0 && !(times_[l] > times_[l - 1])) {
            throw std::invalid_argument("event times must be strictly increasing (index " + std::to_string(l) + ")");
        }
    }
    if (!times_.empty() && (times_.front() < window_start_ || times_.back() > window_end_)) {
        throw std::invalid_argument("event times fall outside the window");
    }
}

double EventSequence::previous_time(std::size_t l) const {
    return l == 0 ? window_start_ : times_[l - 1];
}

double EventSequence::gap(std::size_t l) const {
    return times_[l] - previous_time(l);
}

std::vector<double> EventSequence::gaps() const {
    std::vector<double> out(times_.size());
    for (std::size_t l = 0; l < times_.size(); ++l) {
        out[l] = gap(l);
    }
    return out;
}

OffspringLaw OffspringLaw::exponential(double rate) {
    OffspringLaw law;
    law.family = OffspringFamily::Exponential;
    law.rate = rate;
    law.validate();
    return law;
}

OffspringLaw OffspringLaw::weibull(double shape, double scale) {
    OffspringLaw law;
    law.family = OffspringFamily::Weibull;
    law.shape = shape;
    law.scale = scale;
    law.validate();
    return law;
}

double OffspringLaw::log_density(double gap) const {
    if (family == OffspringFamily::Exponential) {
        return std::log(rate) - rate * gap;
    }
    if (gap <= 0.0) {
        return kNegInf;
    }
    const double z = std::log(gap / scale);
    return std::log(shape / scale) + (shape - 1.0) * z - std::exp(shape * z);
}

double OffspringLaw::cdf(double gap) const {
    if (gap <= 0.0) {
        return 0.0;
    }
    if (family == OffspringFamily::Exponential) {
        return -std::expm1(-rate * gap);
    }
    return -std::expm1(-std::pow(gap / scale, shape));
}

double OffspringLaw::mean() const {
    if (family == OffspringFamily::Exponential) {
        return 1.0 / rate;
    }
    return scale * std::tgamma(1.0 + 1.0 / shape);
}

void OffspringLaw::validate() const {
    if (family == OffspringFamily::Exponential) {
        if (!(rate > 0.0) || !std::isfinite(rate)) {
            throw std::invalid_argument("exponential offspring rate must be positive and finite");
        }
        return;
    }
    if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale)) {
        throw std::invalid_argument("Weibull offspring shape and scale must be positive and finite");
    }
}

double ModelParams::log_first_type(int type) const {
    return type == kOriginal ? std::log(alpha) : std::log1p(-alpha);
}

void ModelParams::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in (0, 1)");
    }
    if (!(gamma >= 0.0) || !(mu1 >= 0.0) || !(mu0 >= 0.0) || !std::isfinite(gamma) || !std::isfinite(mu1) ||
        !std::isfinite(mu0)) {
        throw std::invalid_argument("gamma, mu1 and mu0 must be finite and nonnegative");
    }
    offspring1.validate();
    offspring0.validate();
    if (offspring1.family != offspring0.family) {
        throw std::invalid_argument("both offspring laws must share a family");
    }
    hazard.validate();
}

std::vector<double> to_vector(const ModelParams& params) {
    std::vector<double> out{params.alpha, params.gamma, params.mu1, params.mu0};
    for (const auto* law : {&params.offspring1, &params.offspring0}) {
        if (law->family == OffspringFamily::Exponential) {
            out.push_back(law->rate);
        } else {
            out.push_back(law->shape);
            out.push_back(law->scale);
        }
    }
    out.insert(out.end(), params.hazard.beta.begin(), params.hazard.beta.end());
    return out;
}

ModelParams from_vector(std::span<const double> values, const ModelParams& layout) {
    const std::size_t expected = 4 + layout.offspring1.dimension() + layout.offspring0.dimension() +
                                 layout.hazard.dimension();
    if (values.size() != expected) {
        throw std::invalid_argument("parameter vector has length " + std::to_string(values.size()) + ", expected " +
                                    std::to_string(expected));
    }
    ModelParams out = layout;
    std::size_t k = 0;
    out.alpha = values[k++];
    out.gamma = values[k++];
    out.mu1 = values[k++];
    out.mu0 = values[k++];
    for (auto* law : {&out.offspring1, &out.offspring0}) {
        if (law->family == OffspringFamily::Exponential) {
            law->rate = values[k++];
        } else {
            law->shape = values[k++];
            law->scale = values[k++];
        }
    }
    for (auto& b : out.hazard.beta) {
        b = values[k++];
    }
    return out;
}

std::vector<std::string> parameter_names(const ModelParams& layout) {
    std::vector<std::string> out{"alpha", "gamma", "mu1", "mu0"};
    for (int z : {1, 0}) {
        const auto& law = layout.offspring(z);
        const std::string base = "rho" + std::to_string(z);
        if (law.family == OffspringFamily::Exponential) {
            out.push_back(base);
        } else {
            out.push_back(base + "_shape");
            out.push_back(base + "_scale");
        }
    }
    for (std::size_t j = 0; j < layout.hazard.beta.size(); ++j) {
        out.push_back("beta" + std::to_string(j));
    }
    return out;
}

EpisodeDecomposition decompose(const EventSequence& events, const LabelAssignment& labels) {
    const std::size_t n = events.size();
    if (labels.labels.size() != n) {
        throw std::invalid_argument("label list length does not match event count");
    }
    EpisodeDecomposition out;
    if (n == 0) {
        return out;
    }
    if (labels.labels[0] != 1) {
        throw std::invalid_argument("first event of a window must be labeled parent");
    }
    for (std::size_t l = 0; l < n; ++l) {
        const int y = labels.labels[l];
        if (y != 0 && y != 1) {
            throw std::invalid_argument("labels must be 0 or 1");
        }
        const int x = events.mark(l);
        if (y == 1) {
            out.episodes.push_back(Episode{l, l, {Segment{l, 1, x}}});
            continue;
        }
        auto& episode = out.episodes.back();
        episode.last = l;
        auto& segment = episode.segments.back();
        if (segment.type == x) {
            ++segment.count;
        } else {
            episode.segments.push_back(Segment{l, 1, x});
        }
    }
    return out;
}

LabelAssignment flatten(const EpisodeDecomposition& decomposition, std::size_t n) {
    LabelAssignment out{std::vector<int>(n, 0)};
    for (const auto& episode : decomposition.episodes) {
        out.labels.at(episode.first) = 1;
    }
    return out;
}

double complete_log_density(const EventSequence& events, const LabelAssignment& labels, const ModelParams& params) {
    params.validate();
    const Hazard hazard(params.hazard);
    const std::size_t n = events.size();
    const double last = n == 0 ? events.window_start() : events.times().back();
    CompensatedSum total;
    total += -hazard.integral(last, events.window_end());
    if (n == 0) {
        return total.value();
    }
    const auto decomposition = decompose(events, labels);
    for (std::size_t l = 0; l < n; ++l) {
        const double t = events.time(l);
        if (labels.labels[l] == 1) {
            total += hazard.log_value(t) - hazard.integral(events.previous_time(l), t);
            total += params.log_first_type(events.mark(l));
        } else {
            total += params.offspring(events.mark(l)).log_density(events.gap(l));
        }
    }
    for (const auto& episode : decomposition.episodes) {
        total += log_poisson_pmf(static_cast<int>(episode.segments.size()) - 1, params.gamma);
        for (const auto& segment : episode.segments) {
            total += log_poisson_pmf(static_cast<int>(segment.count) - 1, params.mu(segment.type));
        }
    }
    return total.value();
}

double c_coefficient(double gamma, double alpha) {
    // e^{-g} cosh(g) = (1 + e^{-2g}) / 2, stable for large gamma.
    return (alpha - 0.5) * 0.5 * (1.0 + std::exp(-2.0 * gamma));
}

double expected_events_per_episode(const ModelParams& params) {
    return 0.5 * (2.0 + params.mu1 + params.mu0) * (params.gamma + 1.0) +
           c_coefficient(params.gamma, params.alpha) * (params.mu1 - params.mu0);
}

double expected_episode_length(const ModelParams& params) {
    const double a1 = params.offspring1.mean() * (1.0 + params.mu1);
    const double a0 = params.offspring0.mean() * (1.0 + params.mu0);
    return 0.5 * (a1 + a0) * (params.gamma + 1.0) + c_coefficient(params.gamma, params.alpha) * (a1 - a0);
}

} // namespace episodic
