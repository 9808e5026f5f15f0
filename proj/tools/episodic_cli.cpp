#include "episodic/analytics.hpp"
#include "episodic/clem.hpp"
#include "episodic/direct.hpp"
#include "episodic/gof.hpp"
#include "episodic/io.hpp"
#include "episodic/numeric.hpp"
#include "episodic/simulator.hpp"
#include "episodic/uncertainty.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace episodic;
using nlohmann::json;

namespace {

constexpr int kExitData = 1;
constexpr int kExitConvergence = 2;

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FitOptions {
    double s = 7.0;
    std::string hazard = "bspline";
    int knots = 7;
    int harmonics = 1;
    std::string offspring = "exponential";
    int starts = 5;
    int max_iterations = 500;

    void add(CLI::App* cmd) {
        cmd->add_option("--s", s, "Sub-window length in days")->check(CLI::PositiveNumber);
        cmd->add_option("--hazard", hazard, "Parent hazard family")->check(CLI::IsMember({"bspline", "sinusoidal"}));
        cmd->add_option("--knots", knots, "Cyclic B-spline knots per day")->check(CLI::Range(3, 96));
        cmd->add_option("--harmonics", harmonics, "Sinusoidal harmonics")->check(CLI::Range(0, 24));
        cmd->add_option("--offspring", offspring, "Offspring gap family")
            ->check(CLI::IsMember({"exponential", "weibull"}));
        cmd->add_option("--starts", starts, "CLEM starting points")->check(CLI::PositiveNumber);
        cmd->add_option("--max-iterations", max_iterations, "CLEM iteration cap")->check(CLI::PositiveNumber);
    }

    [[nodiscard]] FitConfig config(std::uint64_t seed) const {
        FitConfig c;
        c.sub_window_length = s;
        c.hazard_family = hazard == "bspline" ? HazardFamily::CyclicBSpline : HazardFamily::Sinusoidal;
        c.hazard_order = hazard == "bspline" ? knots : harmonics;
        c.offspring_family = offspring == "weibull" ? OffspringFamily::Weibull : OffspringFamily::Exponential;
        c.starts = starts;
        c.max_iterations = max_iterations;
        c.seed = seed;
        c.validate();
        return c;
    }
};

std::string csv_number(double x) {
    if (std::isnan(x)) {
        return "NA";
    }
    std::ostringstream out;
    out.precision(10);
    out << x;
    return out.str();
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create directory " + dir.string());
    }
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out,
                 const std::string& labels_out) {
    const auto cfg = read_simulation_config(config_path);
    if (cfg.horizon == 0.0) {
        write_atomic(out, "time,kind\n");
        if (!labels_out.empty()) {
            write_atomic(labels_out, "time,kind,parent\n");
        }
        return 0;
    }
    const auto sim = simulate(cfg.params, cfg.horizon, seed, cfg.policy);
    write_atomic(out, events_csv(sim.events));
    if (!labels_out.empty()) {
        write_atomic(labels_out, labels_csv(sim.events, sim.labels));
    }
    std::cerr << "simulated " << sim.events.size() << " events on [0, " << cfg.horizon << "]\n";
    return 0;
}

// ---------------------------------------------------------------- fit

int cmd_fit(const std::string& events_path, const FitOptions& opts, std::uint64_t seed, std::optional<double> horizon,
            const std::string& variance, int sim_replicates, const std::string& out) {
    const auto events = read_events_csv(events_path, horizon);
    if (events.empty()) {
        throw DataError(events_path + ": no events to fit");
    }
    const auto config = opts.config(seed);
    FitResult result;
    try {
        result = fit(events, config);
    } catch (const AscentFailure& e) {
        throw ConvergenceError(e.what());
    }
    if (variance == "sandwich") {
        result.variance = sandwich(result, partition(events, config.sub_window_length));
    } else if (variance == "simulation") {
        result.variance = simulation_cov(result, events.window_end(), sim_replicates, mix_seed(seed, 7)).estimate;
    }
    write_atomic(out, fit_to_json(result, seed).dump(2) + "\n");
    if (!result.converged) {
        std::cerr << "warning: CLEM stopped after " << result.iterations << " iterations without converging\n";
        return kExitConvergence;
    }
    return 0;
}

// ---------------------------------------------------------------- gof

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string comparison_csv(const CdfComparison& c) {
    std::string out = "v,F_hat,F_model,ci_lo,ci_hi\n";
    for (std::size_t i = 0; i < c.v.size(); ++i) {
        out += csv_number(c.v[i]) + "," + csv_number(c.empirical[i]) + "," + csv_number(c.model[i]) + "," +
               csv_number(c.ci_lower[i]) + "," + csv_number(c.ci_upper[i]) + "\n";
    }
    return out;
}

int cmd_gof(const std::string& events_path, const std::string& fit_path, int w, std::uint64_t seed, int grid_points,
            std::optional<double> horizon, const std::string& out_dir) {
    const json j = read_json(fit_path);
    ModelParams params;
    FitConfig config;
    try {
        params = params_from_json(j.at("params"));
        config = config_from_json(j.at("config"));
    } catch (const json::exception& e) {
        throw DataError(fit_path + ": " + e.what());
    }
    const auto events = read_events_csv(events_path, horizon);
    if (events.empty()) {
        throw DataError(events_path + ": no events");
    }
    const auto grid = default_v_grid(events, static_cast<std::size_t>(grid_points));
    const auto fitted = evaluate_at(events, params, config);
    ensure_dir(out_dir);

    const auto env = envelope(events, params, w, grid, seed);
    std::string csv = "v,F_hat,F_bar,U,L\n";
    for (std::size_t i = 0; i < env.v.size(); ++i) {
        csv += csv_number(env.v[i]) + "," + csv_number(env.observed[i]) + "," + csv_number(env.mean[i]) + "," +
               csv_number(env.upper[i]) + "," + csv_number(env.lower[i]) + "\n";
    }
    write_atomic(fs::path(out_dir) / "envelope.csv", csv);
    if (env.empty_replicates > 0) {
        std::cerr << "warning: " << env.empty_replicates << " simulated replicates had no events\n";
    }

    for (int mark : {kOriginal, kRepost}) {
        const std::string name = mark == kOriginal ? "offspring_original.csv" : "offspring_repost.csv";
        try {
            write_atomic(fs::path(out_dir) / name, comparison_csv(offspring_cdf_check(events, fitted, mark, grid)));
        } catch (const std::invalid_argument& e) {
            std::cerr << "skipping " << name << ": " << e.what() << "\n";
        }
    }
    std::vector<double> unit_grid;
    for (int i = 0; i <= 200; ++i) {
        unit_grid.push_back(5.0 * i / 200.0);
    }
    write_atomic(fs::path(out_dir) / "parent_rescaled.csv",
                 comparison_csv(rescaled_parent_check(events, fitted, unit_grid)));
    return 0;
}

// ---------------------------------------------------------------- analyze

struct Covariates {
    double n_following = 0.0;
    double n_followers = 0.0;
};

std::vector<std::string> split_csv_row(const std::string& row) {
    std::vector<std::string> out;
    std::stringstream ss(row);
    std::string field;
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    return out;
}

std::vector<std::pair<std::string, fs::path>> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::vector<std::pair<std::string, fs::path>> out;
    std::string line;
    std::size_t number = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++number;
        const auto f = split_csv_row(line);
        if (f.empty() || (f.size() == 1 && f[0].empty())) {
            continue;
        }
        if (!header) {
            if (f.size() != 2 || f[0] != "user_id" || f[1] != "path") {
                throw DataError(path.string() + ": line " + std::to_string(number) + ": expected header 'user_id,path'");
            }
            header = true;
            continue;
        }
        if (f.size() != 2 || f[0].empty() || f[1].empty()) {
            throw DataError(path.string() + ": line " + std::to_string(number) + ": expected 'user_id,path'");
        }
        fs::path p = f[1];
        if (p.is_relative()) {
            p = path.parent_path() / p;
        }
        out.emplace_back(f[0], p);
    }
    if (out.empty()) {
        throw DataError(path.string() + ": manifest lists no users");
    }
    return out;
}

std::map<std::string, Covariates> read_covariates(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::map<std::string, Covariates> out;
    std::string line;
    std::size_t number = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++number;
        const auto f = split_csv_row(line);
        if (f.empty() || (f.size() == 1 && f[0].empty())) {
            continue;
        }
        const std::string where = path.string() + ": line " + std::to_string(number) + ": ";
        if (!header) {
            if (f.size() != 3 || f[0] != "user_id" || f[1] != "n_following" || f[2] != "n_followers") {
                throw DataError(where + "expected header 'user_id,n_following,n_followers'");
            }
            header = true;
            continue;
        }
        if (f.size() != 3) {
            throw DataError(where + "expected three fields");
        }
        Covariates c;
        try {
            std::size_t used = 0;
            c.n_following = std::stod(f[1], &used);
            if (used != f[1].size()) {
                throw std::invalid_argument("trailing");
            }
            c.n_followers = std::stod(f[2], &used);
            if (used != f[2].size()) {
                throw std::invalid_argument("trailing");
            }
        } catch (const std::exception&) {
            throw DataError(where + "covariates must be numbers");
        }
        if (c.n_following < 0.0 || c.n_followers <= 0.0) {
            throw DataError(where + "n_following must be >= 0 and n_followers > 0");
        }
        out[f[0]] = c;
    }
    return out;
}

int cmd_analyze(const std::string& manifest_path, const std::string& covariates_path, const FitOptions& opts,
                std::uint64_t seed, std::optional<double> horizon, int grid_size, int bootstrap,
                const std::string& out_dir) {
    const auto manifest = read_manifest(manifest_path);
    const auto covariates = read_covariates(covariates_path);
    const auto config = opts.config(seed);

    std::vector<EventSequence> datasets;
    std::vector<std::string> load_errors(manifest.size());
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        try {
            datasets.push_back(read_events_csv(manifest[i].second, horizon));
        } catch (const std::exception& e) {
            load_errors[i] = e.what();
            datasets.emplace_back();
        }
    }
    const auto fits = batch_fit(datasets, config);
    ensure_dir(out_dir);

    std::vector<std::size_t> ok;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        if (load_errors[i].empty() && fits[i].fit) {
            ok.push_back(i);
        }
    }

    // metrics
    std::vector<std::string> names;
    if (!ok.empty()) {
        names = parameter_names(fits[ok.front()].fit->params);
    }
    std::string metrics = "user_id,status,converged,n_events";
    for (const auto& n : names) {
        metrics += "," + n;
    }
    metrics += ",avg_daily_hazard,events_per_episode,episode_length,message\n";
    for (std::size_t i = 0; i < fits.size(); ++i) {
        metrics += manifest[i].first;
        if (!load_errors[i].empty() || !fits[i].fit) {
            std::string msg = load_errors[i].empty() ? fits[i].error : load_errors[i];
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            metrics += ",failed,0," + std::to_string(datasets[i].size());
            for (std::size_t k = 0; k < names.size() + 3; ++k) {
                metrics += ",NA";
            }
            metrics += "," + msg + "\n";
            continue;
        }
        const auto& f = *fits[i].fit;
        const auto d = derived_metrics(f);
        metrics += std::string(",ok,") + (f.converged ? "1" : "0") + "," + std::to_string(datasets[i].size());
        for (double v : to_vector(f.params)) {
            metrics += "," + csv_number(v);
        }
        metrics += "," + csv_number(d.avg_daily_hazard) + "," + csv_number(d.events_per_episode) + "," +
                   csv_number(d.episode_length) + ",\n";
    }
    write_atomic(fs::path(out_dir) / "metrics.csv", metrics);

    if (ok.size() < 3) {
        std::cerr << "only " << ok.size() << " successful fits; skipping PCA, clustering and correlations\n";
        return ok.empty() ? kExitConvergence : 0;
    }

    // hazard curves and PCA
    std::vector<HazardSpec> hazards;
    for (auto i : ok) {
        hazards.push_back(fits[i].fit->params.hazard);
    }
    const auto curves = hazard_curves(hazards, static_cast<std::size_t>(grid_size));
    std::string curve_csv = "user_id,t,hazard\n";
    for (std::size_t r = 0; r < ok.size(); ++r) {
        for (std::size_t k = 0; k < curves.grid.size(); ++k) {
            curve_csv += manifest[ok[r]].first + "," + csv_number(curves.grid[k]) + "," +
                         csv_number(curves.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k))) + "\n";
        }
    }
    write_atomic(fs::path(out_dir) / "hazard_curves.csv", curve_csv);

    const auto pca = curve_pca(curves.values);
    std::string pca_csv = "component,t,value\n";
    for (std::size_t k = 0; k < curves.grid.size(); ++k) {
        pca_csv += "mean," + csv_number(curves.grid[k]) + "," + csv_number(pca.mean(static_cast<Eigen::Index>(k))) + "\n";
    }
    std::string explained_csv = "component,eigenvalue,explained,cumulative\n";
    double cumulative = 0.0;
    for (std::size_t c = 0; c < pca.eigenvalues.size(); ++c) {
        for (std::size_t k = 0; k < curves.grid.size(); ++k) {
            pca_csv += "pc" + std::to_string(c + 1) + "," + csv_number(curves.grid[k]) + "," +
                       csv_number(pca.eigenfunctions(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c))) +
                       "\n";
        }
        cumulative += pca.explained[c];
        explained_csv += "pc" + std::to_string(c + 1) + "," + csv_number(pca.eigenvalues[c]) + "," +
                         csv_number(pca.explained[c]) + "," + csv_number(cumulative) + "\n";
    }
    write_atomic(fs::path(out_dir) / "pca.csv", pca_csv);
    write_atomic(fs::path(out_dir) / "pca_explained.csv", explained_csv);

    // clusters
    std::map<std::string, std::vector<double>> derived;
    for (auto i : ok) {
        const auto d = derived_metrics(*fits[i].fit);
        derived["avg_daily_hazard"].push_back(d.avg_daily_hazard);
        derived["events_per_episode"].push_back(d.events_per_episode);
        derived["episode_length"].push_back(d.episode_length);
    }
    std::string clusters = "metric,user_id,value,group\n";
    std::string centers = "metric,group,center,size\n";
    for (const auto& [metric, values] : derived) {
        try {
            const auto groups = three_group_cluster(values, 50, seed);
            std::array<int, 3> sizes{};
            for (std::size_t r = 0; r < ok.size(); ++r) {
                clusters += metric + "," + manifest[ok[r]].first + "," + csv_number(values[r]) + "," +
                            group_name(groups.labels[r]) + "\n";
                ++sizes[static_cast<std::size_t>(groups.labels[r])];
            }
            for (int g = 0; g < 3; ++g) {
                centers += metric + "," + group_name(static_cast<Group>(g)) + "," +
                           csv_number(groups.centers[static_cast<std::size_t>(g)]) + "," +
                           std::to_string(sizes[static_cast<std::size_t>(g)]) + "\n";
            }
        } catch (const std::invalid_argument& e) {
            std::cerr << "skipping clustering of " << metric << ": " << e.what() << "\n";
        }
    }
    write_atomic(fs::path(out_dir) / "clusters.csv", clusters);
    write_atomic(fs::path(out_dir) / "cluster_centers.csv", centers);

    // correlations with covariates
    std::vector<std::size_t> with_cov;
    for (auto i : ok) {
        if (covariates.count(manifest[i].first) > 0) {
            with_cov.push_back(i);
        }
    }
    std::string corr = "variable,covariate,r,se,n\n";
    if (with_cov.size() >= 3) {
        std::vector<double> following;
        std::vector<double> log_followers;
        for (auto i : with_cov) {
            following.push_back(covariates.at(manifest[i].first).n_following);
            log_followers.push_back(std::log(covariates.at(manifest[i].first).n_followers));
        }
        std::vector<std::pair<std::string, std::vector<double>>> variables;
        for (std::size_t k = 0; k < names.size(); ++k) {
            std::vector<double> v;
            for (auto i : with_cov) {
                v.push_back(to_vector(fits[i].fit->params)[k]);
            }
            variables.emplace_back(names[k], std::move(v));
        }
        for (const std::string metric : {"avg_daily_hazard", "events_per_episode", "episode_length"}) {
            std::vector<double> v;
            for (auto i : with_cov) {
                const auto d = derived_metrics(*fits[i].fit);
                v.push_back(metric == "avg_daily_hazard"     ? d.avg_daily_hazard
                            : metric == "events_per_episode" ? d.events_per_episode
                                                             : d.episode_length);
            }
            variables.emplace_back(metric, std::move(v));
        }
        std::uint64_t stream = 0;
        for (const auto& [name, v] : variables) {
            for (const auto& [cov_name, cov] :
                 {std::pair<std::string, const std::vector<double>*>{"n_following", &following},
                  std::pair<std::string, const std::vector<double>*>{"log_n_followers", &log_followers}}) {
                ++stream;
                try {
                    const auto c = bootstrap_corr(v, *cov, bootstrap, mix_seed(seed, stream));
                    corr += name + "," + cov_name + "," + csv_number(c.r) + "," + csv_number(c.se) + "," +
                            std::to_string(v.size()) + "\n";
                } catch (const std::invalid_argument&) {
                    corr += name + "," + cov_name + ",NA,NA," + std::to_string(v.size()) + "\n";
                }
            }
        }
    } else {
        std::cerr << "fewer than 3 fitted users have covariates; correlations left empty\n";
    }
    write_atomic(fs::path(out_dir) / "correlations.csv", corr);
    return 0;
}

// ---------------------------------------------------------------- benchmark

int cmd_benchmark(const std::string& config_path, const FitOptions& opts, std::uint64_t seed, int replicates,
                  const std::string& out) {
    const auto sim_cfg = read_simulation_config(config_path);
    if (sim_cfg.horizon <= 0.0) {
        throw DataError(config_path + ": benchmark needs T > 0");
    }
    const auto config = opts.config(seed);
    json runs = json::array();
    int clem_converged = 0;
    int direct_converged = 0;
    int direct_not_above = 0;
    double clem_seconds = 0.0;
    double direct_seconds = 0.0;
    for (int r = 0; r < replicates; ++r) {
        const std::uint64_t rep_seed = mix_seed(seed, static_cast<std::uint64_t>(r));
        const auto sim = simulate(sim_cfg.params, sim_cfg.horizon, rep_seed, sim_cfg.policy);
        json run{{"replicate", r}, {"seed", rep_seed}, {"n_events", sim.events.size()}};
        if (sim.events.empty()) {
            run["error"] = "no events simulated";
            runs.push_back(run);
            continue;
        }
        const auto parts = partition(sim.events, config.sub_window_length);

        auto t0 = std::chrono::steady_clock::now();
        json clem_json;
        try {
            const auto f = fit(sim.events, config);
            const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            clem_seconds += sec;
            clem_converged += f.converged ? 1 : 0;
            clem_json = {{"loglik", f.loglik()}, {"iterations", f.iterations}, {"converged", f.converged},
                         {"seconds", sec}};
        } catch (const std::exception& e) {
            clem_json = {{"converged", false}, {"error", e.what()}};
        }
        run["clem"] = clem_json;

        t0 = std::chrono::steady_clock::now();
        const auto d = direct_maximize(parts, initial_guess(parts, config));
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        direct_seconds += sec;
        direct_converged += d.converged ? 1 : 0;
        run["direct"] = {{"loglik", d.loglik}, {"iterations", d.iterations}, {"converged", d.converged},
                         {"status", d.status}, {"seconds", sec}};
        if (d.converged && clem_json.contains("loglik")) {
            const bool not_above = d.loglik <= clem_json["loglik"].get<double>() + 1e-6;
            direct_not_above += not_above ? 1 : 0;
            run["direct_not_above_clem"] = not_above;
        }
        runs.push_back(run);
        std::cerr << "replicate " << r + 1 << "/" << replicates << " done\n";
    }
    json report{{"replicates", replicates},
                {"seed", seed},
                {"config", config_to_json(config)},
                {"runs", runs},
                {"summary",
                 {{"clem_converged", clem_converged},
                  {"direct_converged", direct_converged},
                  {"direct_not_above_clem", direct_not_above},
                  {"clem_seconds", clem_seconds},
                  {"direct_seconds", direct_seconds},
                  {"time_ratio", clem_seconds > 0.0 ? direct_seconds / clem_seconds : 0.0}}}};
    write_atomic(out, report.dump(2) + "\n");
    return clem_converged == replicates ? 0 : kExitConvergence;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Episodic bivariate point process: simulate, fit and diagnose posting data"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    std::optional<double> horizon;
    FitOptions fit_opts;

    auto* sim = app.add_subcommand("simulate", "Simulate an events CSV from a parameter config");
    std::string sim_config, sim_out, labels_out;
    sim->add_option("config", sim_config, "key = value parameter file")->required()->check(CLI::ExistingFile);
    sim->add_option("--seed", seed, "Random seed");
    sim->add_option("--out", sim_out, "Events CSV")->required();
    sim->add_option("--labels-out", labels_out, "CSV of true parent labels");

    auto* fitc = app.add_subcommand("fit", "Fit the model by composite-likelihood EM");
    std::string events_path, fit_out, variance = "sandwich";
    int sim_replicates = 100;
    fitc->add_option("events", events_path, "Events CSV (time,kind)")->required()->check(CLI::ExistingFile);
    fit_opts.add(fitc);
    fitc->add_option("--seed", seed, "Random seed for multi-start");
    fitc->add_option("--T", horizon, "Window length in days (default: ceil of last time)");
    fitc->add_option("--variance", variance, "Standard errors")
        ->check(CLI::IsMember({"sandwich", "simulation", "none"}));
    fitc->add_option("--sim-replicates", sim_replicates, "Replicates for simulation covariance")
        ->check(CLI::Range(2, 100000));
    fitc->add_option("--out", fit_out, "Fit JSON")->required();

    auto* gof = app.add_subcommand("gof", "Goodness-of-fit diagnostics for a fitted model");
    std::string gof_events, gof_fit, gof_dir;
    int w = 99;
    int grid_points = 200;
    gof->add_option("events", gof_events, "Events CSV")->required()->check(CLI::ExistingFile);
    gof->add_option("fit", gof_fit, "Fit JSON")->required()->check(CLI::ExistingFile);
    gof->add_option("--w", w, "Simulated replicates for the envelope")->check(CLI::Range(1, 100000));
    gof->add_option("--grid", grid_points, "Grid points for gap CDFs")->check(CLI::Range(2, 100000));
    gof->add_option("--seed", seed, "Random seed");
    gof->add_option("--T", horizon, "Window length in days");
    gof->add_option("--out-dir", gof_dir, "Output directory")->required();

    auto* analyze = app.add_subcommand("analyze", "Fit many users and summarize");
    std::string manifest, covariates_path, analyze_dir;
    int curve_grid = 96;
    int bootstrap = 10000;
    analyze->add_option("manifest", manifest, "CSV user_id,path")->required()->check(CLI::ExistingFile);
    analyze->add_option("covariates", covariates_path, "CSV user_id,n_following,n_followers")
        ->required()
        ->check(CLI::ExistingFile);
    fit_opts.add(analyze);
    analyze->add_option("--seed", seed, "Random seed");
    analyze->add_option("--T", horizon, "Common window length in days");
    analyze->add_option("--grid", curve_grid, "Hazard curve grid points per day")->check(CLI::Range(2, 100000));
    analyze->add_option("--bootstrap", bootstrap, "Bootstrap resamples for correlation SEs")
        ->check(CLI::Range(0, 1000000));
    analyze->add_option("--out-dir", analyze_dir, "Output directory")->required();

    auto* bench = app.add_subcommand("benchmark", "Compare CLEM with direct numerical maximization");
    std::string bench_config, bench_out;
    int bench_reps = 20;
    bench->add_option("config", bench_config, "key = value parameter file")->required()->check(CLI::ExistingFile);
    fit_opts.add(bench);
    bench->add_option("--seed", seed, "Random seed");
    bench->add_option("--replicates", bench_reps, "Simulated replicates")->check(CLI::Range(1, 100000));
    bench->add_option("--out", bench_out, "Report JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            return cmd_simulate(sim_config, seed, sim_out, labels_out);
        }
        if (*fitc) {
            return cmd_fit(events_path, fit_opts, seed, horizon, variance, sim_replicates, fit_out);
        }
        if (*gof) {
            return cmd_gof(gof_events, gof_fit, w, seed, grid_points, horizon, gof_dir);
        }
        if (*analyze) {
            return cmd_analyze(manifest, covariates_path, fit_opts, seed, horizon, curve_grid, bootstrap, analyze_dir);
        }
        if (*bench) {
            return cmd_benchmark(bench_config, fit_opts, seed, bench_reps, bench_out);
        }
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return kExitConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
