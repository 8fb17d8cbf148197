#pragma once

// The five law statistics over the ratio variables, their centering tables,
// replication series, hypothesis validators, and convergence diagnostics.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "opplab/model.hpp"
#include "opplab/sampler.hpp"
#include "opplab/stats_util.hpp"
#include "opplab/weights.hpp"

namespace opplab {

// The weighted laws, named by shape:
//   centered_p    b_n^-p sum a_j (R_j - E min(R_j, b_n/a_j))
//   raw_p         b_n^-p sum a_j R_j
//   centered      b_n^-1 sum a_j (R_j - E min(R_j, b_n/a_j))
//   triangular    sum c_nj (R_j - E(R_j 1{|c_nj| R_j <= 1})), j <= m_n
//   log_weighted  (rho(n) log^beta n)^-1 sum (log^{beta-p} j / j) R_j
enum class LawId { centered_p, raw_p, centered, triangular, log_weighted };

const char* law_name(LawId id);      // "centered-p", "raw-p", ...
const char* law_formula(LawId id);   // display form of the statistic
bool law_uses_centering(LawId id);   // centered_p, centered, triangular

// min(r_val, cap); the truncation every centered statistic is built on.
double truncate_r(double r_val, double cap);

// Ratio buffers use r[j-1] = R_j. Centering buffers use the same indexing;
// entries below j0 are never read. All evaluation orders are fixed (one
// kernel reduction per sum), so equal inputs give bit-identical outputs.

// b_n^{-p} sum_{j=j0}^n a_j (R_j - c_j), c_j = E min(R_j, b_n/a_j).
// Throws std::invalid_argument when r or centering is shorter than n or
// n < j0 (missing centering is a configuration error, not a zero default).
double stat_centered_p(std::span<const double> r, const WeightScheme& w, std::uint64_t n,
                       std::span<const double> centering);

// b_n^{-p} sum_{j=j0}^n a_j R_j (no centering).
double stat_raw_p(std::span<const double> r, const WeightScheme& w, std::uint64_t n);

// b_n^{-1} sum_{j=j0}^n a_j (R_j - c_j); same contract as stat_centered_p.
double stat_centered(std::span<const double> r, const WeightScheme& w, std::uint64_t n,
                     std::span<const double> centering);

// sum_{j=1}^{m_n} c_{nj} (R_j - d_j), d_j = E(R_j I(|c_{nj}| R_j <= 1)).
// |c_{nj}| > 1 throws std::domain_error (array-law hypothesis violation).
double stat_triangular(std::span<const double> r, const TriangularArray& arr,
                       std::uint64_t n, std::span<const double> centering);

// (rho(n) log^beta n)^{-1} sum_{j=2}^n (log^{beta-p} j / j) R_j.
// Throws std::domain_error when p < 2 or beta <= 0.
double stat_log_weighted(std::span<const double> r, const WeightScheme& w, std::uint64_t n);

// -----------------------------------------------------------------------------
// Centering tables: E min(R_j, cap) for the centered laws, or
// E(R_j I(R_j <= cap)) for the triangular law, for every j at every grid
// point. iid-ratio models get the closed form; the rest fall back to Monte
// Carlo on the dedicated centering streams. The MC pass runs serially so the
// table bytes depend only on (seed, options), never on the worker count.

struct CenteringTable {
    // values[g][j-1] covers j = 1..n_g (or j = 1..m(n_g) for the triangular
    // law); entries the statistic never reads (j < j0, c = 0) are 0.
    std::vector<std::vector<double>> values;
    bool exact = true;
    // Per grid point: conservative SE of the statistic's centering offset
    // (sum of |weight_j| * se_j over the normalizer); zeros when exact.
    std::vector<double> stat_se;
};

struct CenteringOptions {
    std::size_t mc_trajectories = 4000;
    std::uint64_t seed = 0;
    SamplerOptions sampler{};
};

// arr may be null except for the triangular law. raw_p and log_weighted get
// an empty exact table (they carry no centering).
CenteringTable centering_for(const ModelSpec& model, LawId id, const WeightScheme& w,
                             const TriangularArray* arr,
                             const std::vector<std::uint64_t>& grid,
                             const CenteringOptions& opt);

// -----------------------------------------------------------------------------
// Replication series.

struct StatisticSeries {
    LawId id = LawId::raw_p;
    std::vector<std::uint64_t> n_grid;
    // values[replication][grid point]
    std::vector<std::vector<double>> values;
    std::vector<double> eps_levels;  // filled by the experiment layer
    bool centering_exact = true;
    std::vector<double> centering_stat_se;  // per grid point, zeros when exact
};

struct SeriesOptions {
    std::size_t replications = 200;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0 = hardware concurrency
    SamplerOptions sampler{};
    std::size_t centering_trajectories = 4000;
};

// One worker per replication (stream = (seed, main, rep)); the reduce is
// keyed by replication index, so thread count never changes output bytes.
// Throws std::invalid_argument for an empty or non-increasing grid, a grid
// below the start index, or (triangular) a missing array / grid past its
// horizon.
StatisticSeries compute_series(const ModelSpec& model, LawId id, const WeightScheme& w,
                               const TriangularArray* arr,
                               const std::vector<std::uint64_t>& grid,
                               const SeriesOptions& opt);

// -----------------------------------------------------------------------------
// Hypothesis validators. Finite-horizon trend checks, explicitly heuristic:
// a vanishing condition passes when the sequence is strictly decreasing over
// the last half-decade of the grid and the final value sits below half the
// first grid value; a boundedness condition passes when mid-grid to final
// growth stays within 5%.

struct ConditionTrend {
    std::string condition;   // display form of the sequence
    std::string rate_note;   // symbolic rate when the closed form permits
    std::vector<std::uint64_t> grid;
    std::vector<double> values;
    bool bounded_mode = false;  // boundedness condition (vs vanishing)
    bool tail_decreasing = false;
    double final_value = 0.0;
    bool pass = false;
};

struct WeightValidation {
    LawId id = LawId::raw_p;
    std::vector<ConditionTrend> conditions;
    bool pass = false;       // all conditions pass
    bool heuristic = true;   // always; finite-horizon evidence only
};

// Weight-side conditions: centered_p/raw_p need sum a^alpha / b^alpha and
// n / b^{p-1} to vanish, centered needs n sum (a/b)^{alpha and 1} to vanish,
// log_weighted needs the partial sums of 1/rho^2 to settle (plus the
// symbolic convergence test). The triangular id throws here.
WeightValidation validate_weights(LawId id, const WeightScheme& w, double alpha,
                                  std::uint64_t horizon,
                                  const std::vector<std::uint64_t>& grid);

// Array-side conditions for the triangular law: max |c|, m_n sum c^2
// (vanishing), m_n sum |c| H(1/|c|) (bounded), with H from the model's
// family.
WeightValidation validate_weights(const ModelSpec& model, const TriangularArray& arr,
                                  std::uint64_t horizon,
                                  const std::vector<std::uint64_t>& grid);

// -----------------------------------------------------------------------------
// Convergence diagnostics.

struct DiagRow {
    std::uint64_t n = 0;
    double eps = 0.0;            // requested level
    double eps_effective = 0.0;  // eps + 3 * centering SE (MC centering only)
    std::size_t exceed = 0;
    std::size_t total = 0;
    double p_hat = 0.0;
    Interval ci;
};

struct DiagTable {
    LawId id = LawId::raw_p;
    std::vector<DiagRow> rows;  // grouped by eps, then by n
    bool low_power = false;     // fewer than 100 replications
};

// In-probability mode: p_hat(n, eps) = fraction of replications with
// |T_n| > eps_effective, with a Wilson interval per row.
DiagTable prob_convergence_diag(const StatisticSeries& series,
                                const std::vector<double>& eps);

// Almost-sure mode: fraction of trajectories whose suffix sup over the grid,
// sup_{k >= n, k in grid} |S_k|, exceeds eps_effective.
DiagTable as_convergence_diag(const StatisticSeries& series,
                              const std::vector<double>& eps);

}  // namespace opplab
