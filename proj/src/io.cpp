#include "episodic/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace episodic {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string at_line(std::size_t line, const std::string& message) {
    return "line " + std::to_string(line) + ": " + message;
}

bool parse_number(const std::string& text, double& out) {
    const std::string t = trim(text);
    if (t.empty()) {
        return false;
    }
    const char* first = t.data();
    if (*first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
    return ec == std::errc() && ptr == t.data() + t.size() && std::isfinite(out);
}

std::string family_name(OffspringFamily f) {
    return f == OffspringFamily::Exponential ? "exponential" : "weibull";
}

std::string hazard_name(HazardFamily f) {
    return f == HazardFamily::Sinusoidal ? "sinusoidal" : "bspline";
}

OffspringFamily parse_family(const std::string& s) {
    if (s == "exponential") {
        return OffspringFamily::Exponential;
    }
    if (s == "weibull") {
        return OffspringFamily::Weibull;
    }
    throw DataError("unknown offspring family '" + s + "'");
}

HazardFamily parse_hazard(const std::string& s) {
    if (s == "sinusoidal") {
        return HazardFamily::Sinusoidal;
    }
    if (s == "bspline") {
        return HazardFamily::CyclicBSpline;
    }
    throw DataError("unknown hazard family '" + s + "'");
}

ModelParams layout_for(OffspringFamily offspring, HazardFamily hazard, std::size_t beta_size) {
    ModelParams p;
    p.offspring1.family = offspring;
    p.offspring0.family = offspring;
    p.hazard.family = hazard;
    p.hazard.beta.assign(beta_size, 0.0);
    p.hazard.order = hazard == HazardFamily::Sinusoidal ? static_cast<int>((beta_size - 1) / 2)
                                                        : static_cast<int>(beta_size);
    return p;
}

} // namespace

EventSequence parse_events_csv(std::istream& in, std::optional<double> horizon) {
    std::string line;
    std::size_t number = 0;
    bool header = false;
    std::vector<double> times;
    std::vector<int> marks;
    while (std::getline(in, line)) {
        ++number;
        const std::string row = trim(line);
        if (row.empty()) {
            continue;
        }
        if (!header) {
            std::string h = row;
            h.erase(std::remove(h.begin(), h.end(), ' '), h.end());
            if (h != "time,kind") {
                throw DataError(at_line(number, "expected header 'time,kind'"));
            }
            header = true;
            continue;
        }
        const auto comma = row.find(',');
        if (comma == std::string::npos || row.find(',', comma + 1) != std::string::npos) {
            throw DataError(at_line(number, "expected two fields 'time,kind'"));
        }
        double t = 0.0;
        if (!parse_number(row.substr(0, comma), t)) {
            throw DataError(at_line(number, "time is not a finite number"));
        }
        const std::string kind = trim(row.substr(comma + 1));
        if (kind != "0" && kind != "1") {
            throw DataError(at_line(number, "kind must be 0 or 1"));
        }
        if (t < 0.0) {
            throw DataError(at_line(number, "time is negative"));
        }
        if (!times.empty() && t == times.back()) {
            throw DataError(at_line(number, "duplicate timestamp " + trim(row.substr(0, comma))));
        }
        if (!times.empty() && t < times.back()) {
            throw DataError(at_line(number, "times must be strictly increasing"));
        }
        times.push_back(t);
        marks.push_back(kind == "1" ? kOriginal : kRepost);
    }
    if (!header) {
        throw DataError("missing header 'time,kind'");
    }
    double end = 0.0;
    if (horizon) {
        end = *horizon;
        if (!(end >= 0.0) || !std::isfinite(end)) {
            throw DataError("window length must be finite and nonnegative");
        }
        if (!times.empty() && times.back() > end) {
            throw DataError("event at time " + format_double(times.back()) + " lies past T = " + format_double(end));
        }
    } else if (!times.empty()) {
        end = std::ceil(times.back());
        if (end == times.back() && end == 0.0) {
            end = 1.0;
        }
    }
    return EventSequence(0.0, end, std::move(times), std::move(marks));
}

EventSequence read_events_csv(const std::filesystem::path& path, std::optional<double> horizon) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    try {
        return parse_events_csv(in, horizon);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string format_double(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

std::string events_csv(const EventSequence& events) {
    std::string out = "time,kind\n";
    for (std::size_t l = 0; l < events.size(); ++l) {
        out += format_double(events.time(l));
        out += events.mark(l) == kOriginal ? ",1\n" : ",0\n";
    }
    return out;
}

std::string labels_csv(const EventSequence& events, const LabelAssignment& labels) {
    std::string out = "time,kind,parent\n";
    for (std::size_t l = 0; l < events.size(); ++l) {
        out += format_double(events.time(l));
        out += events.mark(l) == kOriginal ? ",1," : ",0,";
        out += labels.labels[l] == 1 ? "1\n" : "0\n";
    }
    return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::random_device rd;
    const auto tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()) + "_" +
                            std::to_string(rd()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out << content;
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw std::runtime_error("cannot move output into place at " + path.string());
    }
}

SimulationConfig parse_simulation_config(std::istream& in) {
    std::map<std::string, std::pair<std::string, std::size_t>> entries;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        const std::string row = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (row.empty()) {
            continue;
        }
        const auto eq = row.find('=');
        if (eq == std::string::npos) {
            throw DataError(at_line(number, "expected 'key = value'"));
        }
        const std::string key = trim(row.substr(0, eq));
        const std::string value = trim(row.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw DataError(at_line(number, "empty key or value"));
        }
        static const std::vector<std::string> known{"T", "alpha", "gamma", "mu1", "mu0", "offspring", "rho1", "rho0",
                                                    "rho1_shape", "rho1_scale", "rho0_shape", "rho0_scale", "hazard",
                                                    "beta", "knots", "truncation"};
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw DataError(at_line(number, "unknown key '" + key + "'"));
        }
        if (entries.count(key) > 0) {
            throw DataError(at_line(number, "duplicate key '" + key + "'"));
        }
        entries[key] = {value, number};
    }

    auto text = [&](const std::string& key, const std::string& fallback = "") -> std::string {
        const auto it = entries.find(key);
        if (it == entries.end()) {
            if (fallback.empty()) {
                throw DataError("config: missing key '" + key + "'");
            }
            return fallback;
        }
        return it->second.first;
    };
    auto number_of = [&](const std::string& key) {
        const std::string value = text(key);
        double x = 0.0;
        if (!parse_number(value, x)) {
            throw DataError(at_line(entries[key].second, "'" + key + "' is not a number"));
        }
        return x;
    };
    auto checked = [&](const std::string& key, auto&& build) {
        const auto it = entries.find(key);
        try {
            return build();
        } catch (const std::invalid_argument& e) {
            if (it != entries.end()) {
                throw DataError(at_line(it->second.second, e.what()));
            }
            throw DataError(std::string("config: ") + e.what());
        }
    };

    SimulationConfig cfg;
    cfg.horizon = number_of("T");
    if (cfg.horizon < 0.0) {
        throw DataError(at_line(entries["T"].second, "T must be nonnegative"));
    }
    auto& p = cfg.params;
    p.alpha = number_of("alpha");
    if (!(p.alpha > 0.0 && p.alpha < 1.0)) {
        throw DataError(at_line(entries["alpha"].second, "alpha must lie in (0, 1)"));
    }
    for (const char* key : {"gamma", "mu1", "mu0"}) {
        const double x = number_of(key);
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw DataError(at_line(entries[key].second, std::string(key) + " must be finite and nonnegative"));
        }
    }
    p.gamma = number_of("gamma");
    p.mu1 = number_of("mu1");
    p.mu0 = number_of("mu0");

    const std::string offspring = text("offspring", "exponential");
    OffspringFamily family{};
    try {
        family = parse_family(offspring);
    } catch (const DataError& e) {
        throw DataError(at_line(entries["offspring"].second, e.what()));
    }
    if (family == OffspringFamily::Exponential) {
        p.offspring1 = checked("rho1", [&] { return OffspringLaw::exponential(number_of("rho1")); });
        p.offspring0 = checked("rho0", [&] { return OffspringLaw::exponential(number_of("rho0")); });
    } else {
        p.offspring1 = checked("rho1_shape",
                               [&] { return OffspringLaw::weibull(number_of("rho1_shape"), number_of("rho1_scale")); });
        p.offspring0 = checked("rho0_shape",
                               [&] { return OffspringLaw::weibull(number_of("rho0_shape"), number_of("rho0_scale")); });
    }

    std::vector<double> beta;
    {
        std::string raw = text("beta");
        std::replace(raw.begin(), raw.end(), ',', ' ');
        std::istringstream ss(raw);
        std::string token;
        while (ss >> token) {
            double b = 0.0;
            if (!parse_number(token, b)) {
                throw DataError(at_line(entries["beta"].second, "beta entry '" + token + "' is not a number"));
            }
            beta.push_back(b);
        }
    }
    const std::string hazard = text("hazard", "sinusoidal");
    HazardFamily hfam{};
    try {
        hfam = parse_hazard(hazard);
    } catch (const DataError& e) {
        throw DataError(at_line(entries["hazard"].second, e.what()));
    }
    if (hfam == HazardFamily::Sinusoidal) {
        if (entries.count("knots") > 0) {
            throw DataError(at_line(entries["knots"].second, "knots applies only to the bspline hazard"));
        }
        p.hazard = checked("beta", [&] { return HazardSpec::sinusoidal(beta); });
    } else {
        int knots = static_cast<int>(beta.size());
        if (entries.count("knots") > 0) {
            const double k = number_of("knots");
            if (k != std::floor(k) || k != static_cast<double>(beta.size())) {
                throw DataError(at_line(entries["knots"].second, "knots must equal the number of beta entries"));
            }
            knots = static_cast<int>(k);
        }
        p.hazard = checked("beta", [&] { return HazardSpec::cyclic_bspline(knots, beta); });
    }

    const std::string truncation = text("truncation", "drop");
    if (truncation == "drop") {
        cfg.policy = TruncationPolicy::Drop;
    } else if (truncation == "strict") {
        cfg.policy = TruncationPolicy::Strict;
    } else {
        throw DataError(at_line(entries["truncation"].second, "truncation must be 'drop' or 'strict'"));
    }
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    return cfg;
}

SimulationConfig read_simulation_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    try {
        return parse_simulation_config(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

nlohmann::json params_to_json(const ModelParams& params) {
    nlohmann::json j;
    const auto names = parameter_names(params);
    const auto values = to_vector(params);
    nlohmann::json flat = nlohmann::json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
        flat[names[i]] = values[i];
    }
    j["values"] = flat;
    j["offspring"] = family_name(params.offspring1.family);
    j["hazard"] = hazard_name(params.hazard.family);
    j["hazard_order"] = params.hazard.order;
    j["beta"] = params.hazard.beta;
    return j;
}

ModelParams params_from_json(const nlohmann::json& j) {
    try {
        const auto beta = j.at("beta").get<std::vector<double>>();
        const ModelParams layout =
            layout_for(parse_family(j.at("offspring").get<std::string>()),
                       parse_hazard(j.at("hazard").get<std::string>()), beta.size());
        std::vector<double> values;
        for (const auto& name : parameter_names(layout)) {
            values.push_back(j.at("values").at(name).get<double>());
        }
        auto p = from_vector(values, layout);
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed parameter JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("invalid parameters: ") + e.what());
    }
}

nlohmann::json config_to_json(const FitConfig& config) {
    return {{"s", config.sub_window_length},
            {"max_iterations", config.max_iterations},
            {"loglik_tolerance", config.loglik_tolerance},
            {"param_tolerance", config.param_tolerance},
            {"starts", config.starts},
            {"seed", config.seed},
            {"offspring", family_name(config.offspring_family)},
            {"hazard", hazard_name(config.hazard_family)},
            {"hazard_order", config.hazard_order}};
}

FitConfig config_from_json(const nlohmann::json& j) {
    try {
        FitConfig c;
        c.sub_window_length = j.at("s").get<double>();
        c.max_iterations = j.at("max_iterations").get<int>();
        c.loglik_tolerance = j.at("loglik_tolerance").get<double>();
        c.param_tolerance = j.at("param_tolerance").get<double>();
        c.starts = j.at("starts").get<int>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.offspring_family = parse_family(j.at("offspring").get<std::string>());
        c.hazard_family = parse_hazard(j.at("hazard").get<std::string>());
        c.hazard_order = j.at("hazard_order").get<int>();
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed config JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("invalid fit config: ") + e.what());
    }
}

nlohmann::json fit_to_json(const FitResult& fit, std::uint64_t seed) {
    nlohmann::json j;
    j["params"] = params_to_json(fit.params);
    nlohmann::json se = nlohmann::json::object();
    if (fit.variance) {
        const auto names = parameter_names(fit.params);
        for (std::size_t i = 0; i < names.size() && i < fit.variance->standard_errors.size(); ++i) {
            se[names[i]] = fit.variance->standard_errors[i];
        }
        se["method"] = fit.variance->method == VarianceMethod::Sandwich ? "sandwich" : "simulation";
        se["warnings"] = fit.variance->warnings;
    }
    j["se"] = se;
    j["loglik_trace"] = fit.loglik_trace;
    j["loglik"] = fit.loglik();
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["derived"] = {{"events_per_episode", fit.derived.events_per_episode},
                    {"episode_length", fit.derived.episode_length},
                    {"avg_daily_hazard", fit.derived.avg_daily_hazard}};
    j["held_parameters"] = fit.held_parameters;
    j["config"] = config_to_json(fit.config);
    j["seed"] = seed;
    return j;
}

} // namespace episodic
