#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "opplab/config.hpp"
#include "opplab/experiment.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace opplab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

ExperimentConfig config_for(const std::string& json_text, const std::string& out_dir) {
    ExperimentConfig cfg = parse_config(json_text);
    cfg.output_dir = out_dir;
    refresh_resolved(cfg);
    return cfg;
}

}  // namespace

TEST_CASE("expand run writes the sylvester digits of 2/5") {
    TempDir dir("opplab_exp_expand");
    const RunOutcome out = run_experiment(config_for(R"({
        "seed": 1,
        "model": {"preset": "sylvester"},
        "task": {"kind": "expand", "params": {"x": "2/5", "max_digits": 8}}
    })", dir.str()));
    CHECK(out.exit_code == 0);
    CHECK_FALSE(out.partial);
    CHECK(slurp(dir.path / "digits.txt") == "3\n15\n");

    const std::string csv = slurp(dir.path / "results.csv");
    CHECK(csv.find("k,digit,partial_sum,defect") == 0);
    CHECK(csv.find("1,3,1/3,1/15") != std::string::npos);
    CHECK(csv.find("2,15,2/5,0/1") != std::string::npos);

    const auto summary = nlohmann::json::parse(slurp(dir.path / "summary.json"));
    CHECK(summary["terminated"].get<bool>());
    CHECK(summary["digits"].get<int>() == 2);
    CHECK(summary["final_defect"].get<std::string>() == "0/1");

    // digits.txt is hashed into the manifest alongside the core artifacts.
    const auto manifest = nlohmann::json::parse(slurp(dir.path / "manifest.json"));
    bool saw_digits = false;
    for (const auto& entry : manifest["outputs"])
        if (entry["file"] == "digits.txt") saw_digits = true;
    CHECK(saw_digits);
    CHECK(manifest["status"] == "complete");
}

TEST_CASE("identical config and seed reproduce identical bytes") {
    const std::string cfg_text = R"({
        "seed": 42,
        "model": {"preset": "engel"},
        "task": {"kind": "verify", "params": {
            "check": "dominance", "x_grid": [2, 5], "samples": 100000
        }}
    })";
    TempDir a("opplab_exp_det_a");
    TempDir b("opplab_exp_det_b");
    CHECK(run_experiment(config_for(cfg_text, a.str())).exit_code == 0);

    // Second run under a different worker count must not change a byte.
    setenv("OPPLAB_THREADS", "4", 1);
    CHECK(run_experiment(config_for(cfg_text, b.str())).exit_code == 0);
    unsetenv("OPPLAB_THREADS");

    CHECK(slurp(a.path / "results.csv") == slurp(b.path / "results.csv"));
    CHECK(slurp(a.path / "summary.json") == slurp(b.path / "summary.json"));

    // Manifests differ in timestamps (and here the output path); the content
    // hashes and the rest of the resolved config agree.
    auto ma = nlohmann::json::parse(slurp(a.path / "manifest.json"));
    auto mb = nlohmann::json::parse(slurp(b.path / "manifest.json"));
    CHECK(ma["outputs"] == mb["outputs"]);
    ma["config"].erase("output_dir");
    mb["config"].erase("output_dir");
    CHECK(ma["config"] == mb["config"]);
}

TEST_CASE("verification failure maps to exit 1, diagnostics stay 0") {
    // Growing weights a_j = j against b_n = n make the tail-sum proxy grow
    // like n/2, so the required decrease fails (exactly, se = 0).
    TempDir dir("opplab_exp_fail");
    const RunOutcome out = run_experiment(config_for(R"({
        "seed": 3,
        "model": {"preset": "luroth"},
        "task": {"kind": "verify", "params": {
            "check": "tail-sum", "n_grid": [100, 1000],
            "weights": {"u": -1, "v": 0, "s": 1, "r": 0},
            "trajectories": 200
        }}
    })", dir.str()));
    CHECK(out.exit_code == 1);
    CHECK_FALSE(out.partial);
    const auto summary = nlohmann::json::parse(slurp(dir.path / "summary.json"));
    CHECK(summary["verdict"] == "FAIL");

    // A law run whose hypothesis validators fail still exits 0: the trend
    // table is a diagnostic, not a verdict. Constant weights (u = 0) break
    // the vanishing conditions.
    TempDir law_dir("opplab_exp_law0");
    const RunOutcome law_out = run_experiment(config_for(R"({
        "seed": 4,
        "model": {"preset": "luroth"},
        "task": {"kind": "law", "params": {
            "statistic": "raw-p",
            "weights": {"u": 0, "v": 0, "s": 1, "r": 0, "p": 2},
            "n_grid": [100, 400, 1000], "replications": 40, "eps": [0.1]
        }}
    })", law_dir.str()));
    CHECK(law_out.exit_code == 0);
    const auto law_summary = nlohmann::json::parse(slurp(law_dir.path / "summary.json"));
    CHECK_FALSE(law_summary["validators"]["pass"].get<bool>());
    CHECK(law_summary["low_power"].get<bool>());
}

TEST_CASE("a worker panic preserves partial results and exits 4") {
    // l_prime = 0.9 is inadmissible for the luroth family (declared L = 1);
    // the verifier throws after the report skeleton exists.
    TempDir dir("opplab_exp_panic");
    const RunOutcome out = run_experiment(config_for(R"({
        "seed": 2,
        "model": {"preset": "luroth"},
        "task": {"kind": "verify", "params": {
            "check": "moment-bound", "n_grid": [100, 1000],
            "weights": {"u": 1, "v": 1, "s": 1, "r": 1, "p": 2},
            "l_prime": 0.9, "samples": 100000
        }}
    })", dir.str()));
    CHECK(out.exit_code == 4);
    CHECK(out.partial);
    CHECK(out.error.find("l_prime") != std::string::npos);
    CHECK(fs::exists(dir.path / "results.csv"));

    const auto manifest = nlohmann::json::parse(slurp(dir.path / "manifest.json"));
    CHECK(manifest["status"] == "partial");
    CHECK(manifest["error"].get<std::string>().find("l_prime") != std::string::npos);

    std::ostringstream report;
    CHECK(render_report(dir.str(), report) == 0);
    CHECK(report.str().find("[PARTIAL]") != std::string::npos);
}

TEST_CASE("render_report rejects missing or corrupt manifests") {
    std::ostringstream out;
    CHECK(render_report("/nonexistent/run/dir", out) == 3);

    TempDir dir("opplab_exp_badman");
    std::ofstream(dir.path / "manifest.json") << "{broken";
    CHECK(render_report(dir.str(), out) == 3);

    std::ofstream(dir.path / "manifest.json", std::ios::trunc) << "{\"tool\": \"opplab\"}";
    CHECK(render_report(dir.str(), out) == 3);
}

TEST_CASE("report renders tables and plot data for a law run") {
    TempDir dir("opplab_exp_report");
    const RunOutcome out = run_experiment(config_for(R"({
        "seed": 6,
        "model": {"preset": "luroth"},
        "task": {"kind": "law", "params": {
            "statistic": "raw-p",
            "weights": {"u": 1, "v": 1, "s": 1, "r": 1, "p": 2},
            "n_grid": [50, 100, 200], "replications": 40,
            "eps": [0.1, 0.01], "validate": false
        }}
    })", dir.str()));
    REQUIRE(out.exit_code == 0);

    std::ostringstream report;
    CHECK(render_report(dir.str(), report) == 0);
    CHECK(report.str().find("statistic: raw-p") != std::string::npos);
    CHECK(report.str().find("p_hat") != std::string::npos);

    CHECK(fs::exists(dir.path / "trend_eps0.1.dat"));
    CHECK(fs::exists(dir.path / "trend_eps0.01.dat"));
    // Two columns, one line per grid point.
    std::istringstream dat(slurp(dir.path / "trend_eps0.1.dat"));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(dat, line)) {
        ++lines;
        CHECK(line.find(' ') != std::string::npos);
    }
    CHECK(lines == 3);
}

TEST_CASE("sample run emits one row per step with digits while exact") {
    TempDir dir("opplab_exp_sample");
    const RunOutcome out = run_experiment(config_for(R"({
        "seed": 8,
        "model": {"preset": "luroth"},
        "task": {"kind": "sample", "params": {"trajectories": 2, "n_digits": 5}}
    })", dir.str()));
    REQUIRE(out.exit_code == 0);
    const std::string csv = slurp(dir.path / "results.csv");
    CHECK(csv.find("trajectory,step,digit,log_digit,r") == 0);
    std::size_t rows = 0;
    for (char c : csv)
        if (c == '\n') ++rows;
    CHECK(rows == 1 + 2 * 5);

    std::ostringstream report;
    CHECK(render_report(dir.str(), report) == 0);
    CHECK(fs::exists(dir.path / "growth.dat"));
}
