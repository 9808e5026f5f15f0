#include <doctest.h>

#include "support.hpp"

#include "episodic/io.hpp"
#include "episodic/simulator.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace episodic;

namespace {

struct Scratch {
    fs::path dir;
    Scratch() {
        dir = fs::temp_directory_path() / ("episodic_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    [[nodiscard]] fs::path operator/(const std::string& name) const { return dir / name; }
};

int run(const std::string& args, const fs::path& log = {}) {
    std::string command = std::string(CLI_PATH) + " " + args;
    command += log.empty() ? " > /dev/null 2>&1" : " > " + log.string() + " 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& path, const std::string& text) {
    std::ofstream(path) << text;
}

std::vector<std::vector<double>> read_numeric_csv(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            row.push_back(std::stod(cell));
        }
        rows.push_back(row);
    }
    return rows;
}

const std::string kStudyConfig = "T = {T}\nalpha = 0.6\ngamma = 0.5\nmu1 = 0.5\nmu0 = 0.5\nrho1 = 10\nrho0 = 15\n"
                            "hazard = sinusoidal\nbeta = -2 -2 2\n";

std::string study_config(double horizon) {
    std::string text = kStudyConfig;
    text.replace(text.find("{T}"), 3, format_double(horizon));
    return text;
}

} // namespace

TEST_CASE("simulate is deterministic per seed") {
    Scratch tmp;
    write(tmp / "sim.cfg", study_config(100));
    const auto cfg = (tmp / "sim.cfg").string();
    REQUIRE(run("simulate " + cfg + " --seed 4 --out " + (tmp / "a.csv").string() + " --labels-out " +
                (tmp / "a_labels.csv").string()) == 0);
    REQUIRE(run("simulate " + cfg + " --seed 4 --out " + (tmp / "b.csv").string()) == 0);
    REQUIRE(run("simulate " + cfg + " --seed 5 --out " + (tmp / "c.csv").string()) == 0);
    CHECK(slurp(tmp / "a.csv") == slurp(tmp / "b.csv"));
    CHECK(slurp(tmp / "a.csv") != slurp(tmp / "c.csv"));
    CHECK(slurp(tmp / "a.csv").rfind("time,kind\n", 0) == 0);
    CHECK(slurp(tmp / "a_labels.csv").rfind("time,kind,parent\n", 0) == 0);
}

TEST_CASE("simulated event counts match repeated library simulation") {
    Scratch tmp;
    write(tmp / "sim.cfg", study_config(100));
    REQUIRE(run("simulate " + (tmp / "sim.cfg").string() + " --seed 11 --out " + (tmp / "e.csv").string()) == 0);
    const auto events = read_events_csv(tmp / "e.csv", 100.0);
    double sum = 0.0, sq = 0.0;
    const int reps = 400;
    for (int r = 0; r < reps; ++r) {
        const double n = static_cast<double>(simulate(testing::study_params(), 100.0, 1000 + r).events.size());
        sum += n;
        sq += n * n;
    }
    const double mean = sum / reps;
    const double sd = std::sqrt(sq / reps - mean * mean);
    CHECK(std::abs(static_cast<double>(events.size()) - mean) < 3.0 * sd);
}

TEST_CASE("zero horizon gives a header-only file") {
    Scratch tmp;
    write(tmp / "sim.cfg", study_config(0));
    REQUIRE(run("simulate " + (tmp / "sim.cfg").string() + " --out " + (tmp / "e.csv").string() + " --labels-out " +
                (tmp / "l.csv").string()) == 0);
    CHECK(slurp(tmp / "e.csv") == "time,kind\n");
    CHECK(slurp(tmp / "l.csv") == "time,kind,parent\n");
}

TEST_CASE("malformed input fails without writing output") {
    Scratch tmp;
    write(tmp / "bad.csv", "time,kind\n0.5,1\n0.7,x\n");
    CHECK(run("fit " + (tmp / "bad.csv").string() + " --out " + (tmp / "fit.json").string()) == 1);
    CHECK_FALSE(fs::exists(tmp / "fit.json"));

    write(tmp / "dup.csv", "time,kind\n0.5,1\n0.7,0\n0.7,1\n");
    CHECK(run("fit " + (tmp / "dup.csv").string() + " --out " + (tmp / "fit.json").string(), tmp / "log.txt") == 1);
    CHECK(slurp(tmp / "log.txt").find("line 4") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp / "fit.json"));

    write(tmp / "bad.cfg", "T = 10\nalpha = 0.6\nwhat = 1\n");
    CHECK(run("simulate " + (tmp / "bad.cfg").string() + " --out " + (tmp / "e.csv").string(), tmp / "log2.txt") ==
          1);
    CHECK(slurp(tmp / "log2.txt").find("line 3") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp / "e.csv"));
}

TEST_CASE("fit, multi-start and end-to-end recovery") {
    Scratch tmp;
    write(tmp / "sim.cfg", study_config(500));
    REQUIRE(run("simulate " + (tmp / "sim.cfg").string() + " --seed 21 --out " + (tmp / "e.csv").string()) == 0);
    const std::string common = "fit " + (tmp / "e.csv").string() + " --T 500 --s 5 --hazard sinusoidal --harmonics 1";
    REQUIRE(run(common + " --starts 1 --variance none --out " + (tmp / "one.json").string()) == 0);
    REQUIRE(run(common + " --starts 5 --out " + (tmp / "five.json").string()) == 0);
    const auto one = nlohmann::json::parse(slurp(tmp / "one.json"));
    const auto five = nlohmann::json::parse(slurp(tmp / "five.json"));
    CHECK(five["loglik"].get<double>() >= one["loglik"].get<double>() - 1e-9);
    CHECK(five["converged"].get<bool>());

    const auto truth = testing::study_params();
    const auto names = parameter_names(truth);
    const auto values = to_vector(truth);
    for (std::size_t j = 0; j < names.size(); ++j) {
        const double est = five["params"]["values"][names[j]].get<double>();
        const double se = five["se"][names[j]].get<double>();
        INFO(names[j] << " = " << est << " +- " << se << " (truth " << values[j] << ")");
        CHECK(se > 0.0);
        CHECK(std::abs(est - values[j]) < 3.0 * se);
    }
    CHECK(five["derived"]["events_per_episode"].get<double>() > 1.0);

    CHECK(run(common + " --starts 1 --max-iterations 1 --variance none --out " + (tmp / "short.json").string()) == 2);
}

TEST_CASE("goodness-of-fit outputs") {
    Scratch tmp;
    write(tmp / "sim.cfg", study_config(60));
    REQUIRE(run("simulate " + (tmp / "sim.cfg").string() + " --seed 3 --out " + (tmp / "e.csv").string()) == 0);
    REQUIRE(run("fit " + (tmp / "e.csv").string() + " --T 60 --s 5 --hazard sinusoidal --starts 2 --variance none "
                "--out " + (tmp / "fit.json").string()) == 0);
    for (int w : {1, 30}) {
        const auto out = tmp / ("gof" + std::to_string(w));
        REQUIRE(run("gof " + (tmp / "e.csv").string() + " " + (tmp / "fit.json").string() + " --T 60 --grid 40 --w " +
                    std::to_string(w) + " --out-dir " + out.string()) == 0);
        const auto env = read_numeric_csv(out / "envelope.csv");
        REQUIRE(env.size() == 40);
        for (const auto& row : env) {
            REQUIRE(row.size() == 5);
            CHECK(row[4] <= row[2]);
            CHECK(row[2] <= row[3]);
            if (w == 1) {
                CHECK(row[3] == row[4]);
            }
        }
        CHECK(fs::exists(out / "offspring_original.csv"));
        CHECK(fs::exists(out / "offspring_repost.csv"));
        CHECK(fs::exists(out / "parent_rescaled.csv"));
    }
}

TEST_CASE("cohort analysis on synthetic users") {
    Scratch tmp;
    std::string manifest = "user_id,path\n";
    std::string covariates = "user_id,n_following,n_followers\n";
    std::mt19937_64 rng(5);
    for (int u = 0; u < 9; ++u) {
        auto p = testing::study_params();
        p.hazard = HazardSpec::sinusoidal({-1.5 + 0.3 * u, -1.0, 1.0});
        const auto sim = simulate(p, 60.0, 300 + static_cast<std::uint64_t>(u));
        const std::string file = "user" + std::to_string(u) + ".csv";
        write(tmp / file, events_csv(sim.events));
        manifest += "u" + std::to_string(u) + "," + file + "\n";
        covariates += "u" + std::to_string(u) + "," + std::to_string(50 + 7 * u) + "," +
                      std::to_string(100 * (u + 1) * (u + 1)) + "\n";
    }
    write(tmp / "manifest.csv", manifest);
    write(tmp / "cov.csv", covariates);
    const auto out = tmp / "cohort";
    REQUIRE(run("analyze " + (tmp / "manifest.csv").string() + " " + (tmp / "cov.csv").string() +
                " --T 60 --s 5 --hazard sinusoidal --starts 2 --bootstrap 200 --out-dir " + out.string()) == 0);
    for (const char* name : {"metrics.csv", "hazard_curves.csv", "pca.csv", "pca_explained.csv", "clusters.csv",
                             "cluster_centers.csv", "correlations.csv"}) {
        CHECK(fs::exists(out / name));
    }
    const auto clusters = slurp(out / "clusters.csv");
    for (const char* g : {"low", "medium", "high"}) {
        CHECK(clusters.find(g) != std::string::npos);
    }
    const auto metrics = slurp(out / "metrics.csv");
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 10);
    const auto correlations = slurp(out / "correlations.csv");
    CHECK(correlations.find("log_n_followers") != std::string::npos);
}

TEST_CASE("benchmark report") {
    Scratch tmp;
    write(tmp / "sim.cfg", study_config(40));
    REQUIRE(run("benchmark " + (tmp / "sim.cfg").string() + " --s 5 --hazard sinusoidal --starts 2 --replicates 3 "
                "--out " + (tmp / "bench.json").string()) == 0);
    const auto report = nlohmann::json::parse(slurp(tmp / "bench.json"));
    CHECK(report["runs"].size() == 3);
    CHECK(report["summary"]["clem_converged"] == 3);
    for (const char* key : {"direct_converged", "direct_not_above_clem", "clem_seconds", "direct_seconds",
                            "time_ratio"}) {
        CHECK(report["summary"].contains(key));
    }
    for (const auto& r : report["runs"]) {
        CHECK(r.contains("clem"));
        CHECK(r.contains("direct"));
        if (r.contains("direct_not_above_clem")) {
            CHECK(r["direct_not_above_clem"].get<bool>());
        }
    }
}
