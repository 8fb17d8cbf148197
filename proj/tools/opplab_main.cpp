// opplab: command-line front end for the expansion laboratory.
//
//   opplab expand|sample|verify|law --config cfg.json [--seed N] [--out DIR]
//   opplab report RUN_DIR
//
// The subcommand must match the task declared in the config; the config file
// is the single source of truth for everything else. Exit codes: 0 success,
// 1 a verification check failed, 2 config parse error, 3 schema violation or
// task/subcommand mismatch, 4 a worker panicked (partial results kept).

#include "opplab/config.hpp"
#include "opplab/experiment.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <iostream>
#include <string>

namespace {

void print_violations(const opplab::ConfigError& e) {
    for (const std::string& line : e.violations) std::cerr << "config: " << line << '\n';
}

int run_task(const std::string& subcommand, const std::string& config_path,
             const std::uint64_t* seed_override, const std::string* out_override) {
    opplab::ExperimentConfig cfg;
    try {
        cfg = opplab::load_config(config_path);
    } catch (const opplab::ConfigError& e) {
        print_violations(e);
        return e.exit_code;
    }
    if (opplab::task_name(cfg.task) != subcommand) {
        std::cerr << "config: task is '" << opplab::task_name(cfg.task)
                  << "' but the subcommand is '" << subcommand << "'\n";
        return 3;
    }
    if (seed_override) cfg.seed = *seed_override;
    if (out_override) cfg.output_dir = *out_override;
    if (seed_override || out_override) opplab::refresh_resolved(cfg);

    const opplab::RunOutcome outcome = opplab::run_experiment(cfg);
    if (outcome.partial)
        std::cerr << "opplab: worker panic, partial results in " << outcome.dir.string()
                  << ": " << outcome.error << '\n';
    else
        std::cout << "opplab: wrote " << (outcome.dir / "results.csv").string() << '\n';
    return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation and verification laboratory for generalized "
                 "digit expansions"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool have_seed = false;
    bool have_out = false;
    std::string report_dir;

    for (const char* name : {"expand", "sample", "verify", "law"}) {
        CLI::App* sub = app.add_subcommand(name, std::string("run a ") + name + " task");
        sub->add_option("--config", config_path, "experiment config (JSON)")
            ->required();
        sub->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { have_seed = true; });
        sub->add_option("--out", out_dir, "override the output directory")
            ->each([&](const std::string&) { have_out = true; });
    }
    CLI::App* rep = app.add_subcommand("report", "render a run directory as text");
    rep->add_option("dir", report_dir, "run directory with manifest.json")->required();

    CLI11_PARSE(app, argc, argv);

    const CLI::App* active = app.get_subcommands().front();
    if (active->get_name() == "report") return opplab::render_report(report_dir, std::cout);
    return run_task(active->get_name(), config_path, have_seed ? &seed : nullptr,
                    have_out ? &out_dir : nullptr);
}
