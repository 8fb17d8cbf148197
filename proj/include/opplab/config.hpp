#pragma once

// Experiment configuration: a strict JSON schema turned into validated
// structs. Parsing collects every violation (with its field path) before
// failing, unknown keys are rejected by name, and the fully resolved config
// (defaults materialized) is kept as text for the run manifest.
//
// Exit-code contract: parse errors map to 2, schema violations to 3; the
// ConfigError subclasses carry the code.

#include "opplab/model.hpp"
#include "opplab/sampler.hpp"
#include "opplab/statistics.hpp"
#include "opplab/weights.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace opplab {

inline constexpr const char* kToolName = "opplab";
inline constexpr const char* kToolVersion = "1.0.0";

enum class TaskKind { expand, sample, verify, law };

const char* task_name(TaskKind k);
TaskKind task_from_name(const std::string& name);  // throws std::invalid_argument

struct ConfigError : std::runtime_error {
    ConfigError(int code, std::string what_arg, std::vector<std::string> violation_list)
        : std::runtime_error(std::move(what_arg)),
          exit_code(code),
          violations(std::move(violation_list)) {}
    int exit_code;
    std::vector<std::string> violations;  // "field.path: message" lines
};

struct ConfigParseError : ConfigError {
    explicit ConfigParseError(std::string msg)
        : ConfigError(2, msg, {std::move(msg)}) {}
};

struct ConfigSchemaError : ConfigError {
    explicit ConfigSchemaError(std::vector<std::string> violation_list)
        : ConfigError(3, violation_list.empty() ? "schema violation" : violation_list.front(),
                      std::move(violation_list)) {}
};

struct ExpandParams {
    Rational x = Rational(1, 2);
    std::size_t max_digits = 64;
};

struct SampleParams {
    std::size_t trajectories = 1;
    std::size_t n_digits = 32;
};

struct VerifyParams {
    std::string check;  // dominance | truncated-moments | tail-sum |
                        // moment-bound | second-moment | cov-bound
    std::vector<double> x_grid;
    std::vector<double> q_grid;
    std::vector<double> t_grid;
    std::vector<std::uint64_t> n_grid;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
    WeightScheme weights;
    std::uint64_t samples = 100000;
    std::uint64_t trajectories = 2000;
    std::uint64_t chain_step = 8;
    double p = 2.0;
    double l_prime = 1.1;
    double alpha = 0.0;  // 0 = inherit the model's alpha
    double a_scale = 1.0;
    double k_sigma = 3.0;
};

struct LawParams {
    LawId statistic = LawId::raw_p;
    WeightScheme weights;
    bool has_array = false;
    ArrayKind array_kind = ArrayKind::constant;
    double array_scale = 1.0;
    double m_factor = 1.0;
    std::vector<std::uint64_t> n_grid;
    std::size_t replications = 200;
    std::vector<double> eps{0.1, 0.01};
    bool as_mode = false;  // suffix-sup exceedance instead of per-n
    bool validate = true;
    std::size_t centering_trajectories = 4000;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "run";
    unsigned threads = 0;  // 0 = hardware concurrency
    ModelSpec model;
    std::string model_preset;  // empty when the model is custom
    SamplerOptions sampler;
    TaskKind task = TaskKind::sample;
    ExpandParams expand_params;
    SampleParams sample_params;
    VerifyParams verify_params;
    LawParams law_params;
    std::string resolved;  // resolved config as JSON text (manifest echo)
};

// Parse + validate a JSON config document. Throws ConfigParseError on
// malformed JSON and ConfigSchemaError with one line per violation.
ExperimentConfig parse_config(const std::string& json_text);

// File wrapper: missing/unreadable files count as parse errors (exit 2).
ExperimentConfig load_config(const std::string& path);

// Re-serialize the resolved form after field overrides (--seed, --out).
void refresh_resolved(ExperimentConfig& cfg);

}  // namespace opplab
