#pragma once

// Run orchestration and artifact persistence. A run turns one validated
// config into an output directory holding results.csv (RFC-4180, 17
// significant digits, exact "p/q" rationals), summary.json, task-specific
// side files, and manifest.json (resolved config, stream allocation, content
// hashes, timestamps). Output bytes are a function of (config, seed) alone;
// wall-clock data lives only in the manifest. render_report turns a run
// directory back into a text table plus two-column plot files.

#include "opplab/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace opplab {

struct RunOutcome {
    int exit_code = 0;  // 0 ok, 1 verification FAIL, 4 worker panic
    std::filesystem::path dir;
    bool partial = false;
    std::string error;  // what() of the panic when partial
};

// Executes the configured task and persists all artifacts. Panics inside the
// task are caught: partial results are kept, the manifest is marked partial,
// and the exit code is 4. Filesystem failures (unwritable output dir) throw.
RunOutcome run_experiment(const ExperimentConfig& cfg);

// Renders manifest + results of a run directory as a text report on `out`
// and writes gnuplot-ready two-column .dat files next to the artifacts.
// Returns 0, or 3 when the manifest is missing or corrupt. A partial run
// renders with a PARTIAL banner.
int render_report(const std::string& artifact_dir, std::ostream& out);

}  // namespace opplab
