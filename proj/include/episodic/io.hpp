#pragma once

#include "episodic/clem.hpp"
#include "episodic/model.hpp"
#include "episodic/simulator.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>

namespace episodic {

/// Malformed input; the message carries the offending line when there is one.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Events CSV with header `time,kind`; times strictly increasing, kind in {0, 1}.
/// The window is [0, horizon], with horizon defaulting to ceil(max time).
[[nodiscard]] EventSequence parse_events_csv(std::istream& in, std::optional<double> horizon = std::nullopt);
[[nodiscard]] EventSequence read_events_csv(const std::filesystem::path& path,
                                            std::optional<double> horizon = std::nullopt);

[[nodiscard]] std::string format_double(double x);
[[nodiscard]] std::string events_csv(const EventSequence& events);
[[nodiscard]] std::string labels_csv(const EventSequence& events, const LabelAssignment& labels);

/// Writes through a temporary file in the same directory, then renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct SimulationConfig {
    ModelParams params;
    double horizon = 0.0;
    TruncationPolicy policy = TruncationPolicy::Drop;
};

/// key = value lines; '#' starts a comment. Keys: T, alpha, gamma, mu1, mu0,
/// offspring (exponential|weibull), rho1, rho0 or rho1_shape, rho1_scale, rho0_shape,
/// rho0_scale, hazard (sinusoidal|bspline), beta (space or comma separated),
/// knots (optional check for bspline), truncation (drop|strict).
[[nodiscard]] SimulationConfig parse_simulation_config(std::istream& in);
[[nodiscard]] SimulationConfig read_simulation_config(const std::filesystem::path& path);

[[nodiscard]] nlohmann::json params_to_json(const ModelParams& params);
[[nodiscard]] ModelParams params_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json config_to_json(const FitConfig& config);
[[nodiscard]] FitConfig config_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json fit_to_json(const FitResult& fit, std::uint64_t seed);

} // namespace episodic
