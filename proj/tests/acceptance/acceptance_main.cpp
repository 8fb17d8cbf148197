// Acceptance gate for the laboratory. Eleven desk-scale criteria, one
// [PASS]/[FAIL] line each; every tolerance, grid, seed and runtime budget is
// pinned below. The binary exits nonzero when any criterion fails.

#include "opplab/config.hpp"
#include "opplab/expansion.hpp"
#include "opplab/experiment.hpp"
#include "opplab/oracle.hpp"
#include "opplab/rng.hpp"
#include "opplab/sampler.hpp"
#include "opplab/statistics.hpp"
#include "opplab/stats_util.hpp"
#include "opplab/verifier.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace opplab;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kChiSquareP = 0.001;        // sampler-equivalence gate
constexpr double kIdentityGap = 1e-8;        // truncated-moment identity
constexpr double kProxyPin = 0.1154;         // weighted tail sum at n = 1e4
constexpr double kProxyTol = 1e-3;
constexpr double kAsFinal = 0.05;            // strong-law final exceedance
constexpr double kRoundTripBudget = 10.0;    // seconds
constexpr double kEquivalenceBudget = 60.0;
constexpr double kWeakLawBudget = 300.0;
constexpr double kStrongLawBudget = 300.0;

int failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int idx, bool ok, const std::string& what, double secs) {
    std::printf("[%s] c%02d %s (%.1f s)\n", ok ? "PASS" : "FAIL", idx, what.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
}

const LemmaRow* find_row(const LemmaReport& rep, const std::string& inputs,
                         const std::string& note_part) {
    for (const LemmaRow& row : rep.rows)
        if (row.inputs == inputs && row.note.find(note_part) != std::string::npos) return &row;
    return nullptr;
}

// Exceedance-trend verdict used by the decreasing-p-hat criteria: the grid
// sequence must be nonincreasing and either strictly lower at the end or
// already at the zero floor (at these scales the true probabilities sit far
// below the 1/replications resolution, so all-zero tables are the expected
// converged state, not a trend failure).
bool phat_trend_ok(const std::vector<double>& p) {
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[i - 1]) return false;
    return p.back() < p.front() || p.back() == 0.0;
}

std::vector<double> phat_at_eps(const DiagTable& diag, double eps) {
    std::vector<double> out;
    for (const DiagRow& row : diag.rows)
        if (row.eps == eps) out.push_back(row.p_hat);
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// --- c1: exact round trip -----------------------------------------------------

void criterion_1() {
    Timer t;
    RandomStream rng(20260815, StreamSpace::aux, 1);
    std::size_t terminated = 0, luroth_checked = 0;
    bool ok = true;

    for (int i = 0; i < 1000 && ok; ++i) {
        const std::uint64_t q = 2 + rng.next_u64() % 999999;  // q in [2, 1e6]
        const std::uint64_t p = 1 + rng.next_u64() % (q - 1);
        Rational x(static_cast<unsigned long>(p), static_cast<unsigned long>(q));
        x.canonicalize();

        const DigitSequence lu = expand(x, Scheme::luroth, {.max_digits = 64});
        const DigitSequence en = expand(x, Scheme::engel, {.max_digits = 256});
        const DigitSequence sy = expand(x, Scheme::sylvester, {.max_digits = 64});

        for (const DigitSequence* seq : {&lu, &en, &sy}) {
            if (seq->terminated) {
                ++terminated;
                if (reconstruct(*seq) != x) ok = false;
            }
            if (defect(x, *seq, seq->digits.size()) < 0) ok = false;
        }

        const std::size_t k = lu.digits.size();
        const Rational bound(BigInt(1), BigInt(1) << k);
        if (!(defect(x, lu, k) < bound)) ok = false;
        ++luroth_checked;
    }

    const double secs = t.seconds();
    ok = ok && secs < kRoundTripBudget;
    report(1, ok,
           "exact round trip: 1000 rationals (q <= 1e6) x 3 schemes, " +
               std::to_string(terminated) + " terminating reconstructed exactly, luroth defect < 2^-k on " +
               std::to_string(luroth_checked) + " expansions",
           secs);
}

// --- c2: sampler law equivalence ------------------------------------------------

void bin_digit(const BigInt& b, std::vector<std::uint64_t>& bins) {
    if (b <= 50)
        ++bins[b.get_ui() - 1];
    else
        ++bins[50];
}

void criterion_2() {
    Timer t;
    constexpr std::uint64_t N = 1000000;
    bool ok = true;
    std::string detail;

    const struct {
        const char* name;
        Scheme scheme;
        ModelSpec model;
    } cases[] = {{"luroth", Scheme::luroth, ModelSpec::luroth()},
                 {"engel", Scheme::engel, ModelSpec::engel()}};

    for (const auto& cs : cases) {
        // First-digit cells B = 1..50 plus a tail bucket, and one-step
        // transition cells from B_1 = h for h in {1, 2, 3}.
        std::vector<std::uint64_t> samp_first(51, 0), orac_first(51, 0);
        std::vector<std::vector<std::uint64_t>> samp_tr(3, std::vector<std::uint64_t>(51, 0));
        std::vector<std::vector<std::uint64_t>> orac_tr(3, std::vector<std::uint64_t>(51, 0));

        for (std::uint64_t i = 0; i < N; ++i) {
            ChainSampler s(cs.model, RandomStream(20260815, StreamSpace::aux, 1000 + i));
            s.start();
            const BigInt b1 = s.digit();
            s.next_ratio();
            const BigInt b2 = s.digit();
            bin_digit(b1, samp_first);
            if (b1 >= 1 && b1 <= 3) bin_digit(b2, samp_tr[b1.get_ui() - 1]);
        }

        RandomStream orng(20260815, StreamSpace::aux, 2);
        for (std::uint64_t i = 0; i < N; ++i) {
            const DigitSequence seq = sample_x_expansion(cs.scheme, orng, 64, {.max_digits = 2});
            const std::vector<BigInt> fw = to_framework_digits(seq);
            if (fw.empty()) continue;
            bin_digit(fw[0], orac_first);
            if (fw.size() >= 2 && fw[0] >= 1 && fw[0] <= 3)
                bin_digit(fw[1], orac_tr[fw[0].get_ui() - 1]);
        }

        const ChiSquareResult first = chi_square_two_sample(samp_first, orac_first);
        if (first.p_value <= kChiSquareP) ok = false;
        detail += std::string(cs.name) + " first p=" + std::to_string(first.p_value).substr(0, 5);
        for (int h = 0; h < 3; ++h) {
            const ChiSquareResult tr = chi_square_two_sample(samp_tr[h], orac_tr[h]);
            if (tr.p_value <= kChiSquareP) ok = false;
            detail += " h" + std::to_string(h + 1) + " p=" + std::to_string(tr.p_value).substr(0, 5);
        }
        detail += "; ";
    }

    const double secs = t.seconds();
    ok = ok && secs < kEquivalenceBudget;
    report(2, ok,
           "sampler vs expansion-of-uniform oracle, chi-square (51 digit cells, transitions from "
           "h in {1,2,3}) at N=1e6, all p > 0.001: " +
               detail,
           secs);
}

// --- c3: dominance and the sandwich ---------------------------------------------

void criterion_3() {
    Timer t;
    VerifyOptions opt;
    opt.seed = 31;
    const std::vector<double> grid{1.5, 2.0, 5.0, 10.0, 50.0};

    const LemmaReport lu = verify_dominance(ModelSpec::luroth(), grid, 1000000, opt);
    const LemmaRow* pinned = find_row(lu, "x=2 exact", "exact tail");
    const bool lu_pin = pinned && std::abs(pinned->lhs - 1.0 / 3.0) < 1e-12 &&
                        pinned->rhs == 0.5;

    const LemmaReport en = verify_dominance(ModelSpec::engel(), grid, 1000000, opt);
    const LemmaReport sy = verify_dominance(ModelSpec::sylvester(), grid, 1000000, opt);

    const bool ok = lu.verdict == Verdict::pass && lu_pin && en.verdict == Verdict::pass &&
                    sy.verdict == Verdict::pass;
    report(3, ok,
           "tail dominance + sandwich, x in {1.5,2,5,10,50}: luroth exact P(R>2)=1/3 <= 1/2, "
           "engel/sylvester MC N=1e6, all margins >= -3 SE",
           t.seconds());
}

// --- c4: truncated moments and the tail identity ---------------------------------

void criterion_4() {
    Timer t;
    VerifyOptions opt;
    opt.seed = 41;
    const std::vector<double> t_grid{1.0, 2.0, 10.0, 1000.0};
    bool ok = true;
    double worst_gap = 0.0;

    const struct {
        DistributionFamily f;
        std::vector<double> q_grid;  // {0.5, 1, alpha, 2}, deduplicated
    } cases[] = {{DistributionFamily::uniform(), {0.5, 1.0, 2.0}},
                 {DistributionFamily::power(2.0), {0.5, 1.0, 2.0}},
                 {DistributionFamily::perturbed_power(1.5, 1.0, 0.5), {0.5, 1.0, 1.5, 2.0}}};

    for (const auto& cs : cases) {
        const LemmaReport rep =
            verify_trunc_moments(ModelSpec::luroth(cs.f), cs.q_grid, t_grid, 100000, opt);
        if (rep.verdict != Verdict::pass) ok = false;
        for (double tt : t_grid) {
            const TailIdentityReport id = tail_integral_identity(cs.f, tt);
            worst_gap = std::max(worst_gap, id.gap);
            if (!(id.gap < kIdentityGap)) ok = false;
        }
    }

    char gap[32];
    std::snprintf(gap, sizeof gap, "%.2e", worst_gap);
    report(4, ok,
           std::string("truncated-moment bounds over q in {0.5,1,alpha,2}, t in {1,2,10,1e3}, "
                       "three families, all rows PASS; tail identity gap ") +
               gap + " < 1e-8",
           t.seconds());
}

// --- c5: vanishing weighted tail sum ---------------------------------------------

void criterion_5() {
    Timer t;
    VerifyOptions opt;
    opt.seed = 51;
    WeightScheme w;  // a_j = 1/j, b_n = log^2 n
    w.u = 1.0;
    w.v = 0.0;
    w.s = 0.0;
    w.r = 2.0;

    const LemmaReport rep =
        verify_tail_sum(ModelSpec::luroth(), w, 1.0, {100, 1000, 10000}, 600, opt);
    const LemmaRow* proxy = find_row(rep, "n=10000", "proxy decreasing");
    const bool pin = proxy && std::abs(proxy->lhs - kProxyPin) <= kProxyTol;
    const bool ok = rep.verdict == Verdict::pass && pin;

    char got[32];
    std::snprintf(got, sizeof got, "%.5f", proxy ? proxy->lhs : -1.0);
    report(5, ok,
           std::string("weighted tail sum, a_j=1/j, b_n=log^2 n, alpha=1: proxy decreasing over "
                       "{1e2,1e3,1e4}, value ") +
               got + " = 0.1154 +- 0.001 at n=1e4, MC within proxy CI",
           t.seconds());
}

// --- c6: truncated second-moment bound -------------------------------------------

void criterion_6() {
    Timer t;
    VerifyOptions opt;
    opt.seed = 61;
    WeightScheme w;  // a_j = 1/j, b_n = n log n, the weak-law scheme
    const LemmaReport rep =
        verify_moment_bound(ModelSpec::luroth(), w, 2.0, 1.1, {1000, 10000}, 100000, opt);

    const bool header_ok = rep.header_note.find("= 5.4") != std::string::npos &&
                           rep.header_note.find("empirical n_0 = 1000") != std::string::npos;
    const bool ok = rep.verdict == Verdict::pass && header_ok;
    report(6, ok,
           "truncated moment bound, luroth p=2 alpha=1 L'=1.1: E R_nj^2 <= 5.4 (b_n/a_j) for all "
           "j at n in {1e3,1e4}, margins >= -3 SE, N=1e5 per cell",
           t.seconds());
}

// --- c7: weak laws ------------------------------------------------------------------

void criterion_7() {
    Timer t;
    SeriesOptions sopt;
    sopt.replications = 200;
    sopt.seed = 71;
    const std::vector<double> eps{0.1, 0.01};
    bool ok = true;

    WeightScheme thm12;  // a_j = 1/j, b_n = n log n, p = 2
    WeightScheme thm3;   // a_j = 1/j^2, b_n = n log^2 n, p = 2
    thm3.u = 2.0;
    thm3.r = 2.0;

    for (const WeightScheme& w : {thm12, thm3}) {
        const StatisticSeries series = compute_series(ModelSpec::luroth(), LawId::centered_p, w,
                                                      nullptr, {1000, 10000, 100000}, sopt);
        const DiagTable diag = prob_convergence_diag(series, eps);
        for (double e : eps)
            if (!phat_trend_ok(phat_at_eps(diag, e))) ok = false;

        // The strict-decrease requirement is checked on the median |T_n|,
        // which decays on real signal where the exceedance table has already
        // hit its zero floor.
        std::vector<double> med;
        for (std::size_t g = 0; g < series.n_grid.size(); ++g) {
            std::vector<double> abs_vals;
            for (const auto& rep_vals : series.values)
                abs_vals.push_back(std::abs(rep_vals[g]));
            med.push_back(median(abs_vals));
        }
        for (std::size_t g = 1; g < med.size(); ++g)
            if (!(med[g] < med[g - 1])) ok = false;
    }

    const double secs = t.seconds();
    ok = ok && secs < kWeakLawBudget;
    report(7, ok,
           "weak laws, luroth centered sums (a_j=1/j, b_n=n log n and a_j=1/j^2, b_n=n log^2 n, "
           "p=2), 200 reps, eps in {0.1,0.01}: p-hat nonincreasing to the zero floor over "
           "{1e3,1e4,1e5} and median |T_n| strictly decreasing",
           secs);
}

// --- c8: array-form weak law ---------------------------------------------------------

void criterion_8() {
    Timer t;
    SeriesOptions sopt;
    sopt.replications = 200;
    sopt.seed = 81;
    const std::vector<std::uint64_t> grid{100, 1000, 10000};
    const std::vector<double> eps{0.1, 0.01};
    bool ok = true;

    const struct {
        ModelSpec model;
        ArrayKind kind;
    } cases[] = {{ModelSpec::luroth(), ArrayKind::inv_n2_log2},
                 {ModelSpec::luroth(DistributionFamily::power(2.0)), ArrayKind::inv_n2}};

    for (const auto& cs : cases) {
        const TriangularArray arr(cs.kind, 1.0, grid.back());
        const WeightValidation val = validate_weights(cs.model, arr, grid.back(), grid);
        if (!val.pass) ok = false;

        const StatisticSeries series =
            compute_series(cs.model, LawId::triangular, WeightScheme{}, &arr, grid, sopt);
        const DiagTable diag = prob_convergence_diag(series, eps);
        for (double e : eps)
            if (!phat_trend_ok(phat_at_eps(diag, e))) ok = false;
    }

    report(8, ok,
           "array-form law: (uniform F, c_nj=1/(n^2 log^2 n)) and (power alpha=2, c_nj=n^-2), "
           "m_n=n: validators PASS and p-hat decreasing over {1e2,1e3,1e4}",
           t.seconds());
}

// --- c9: strong law ---------------------------------------------------------------

void criterion_9() {
    Timer t;
    SeriesOptions sopt;
    sopt.replications = 200;
    sopt.seed = 91;
    WeightScheme w;  // log-weighted sum, beta = 1, p = 2, rho(n) = n
    w.p = 2.0;
    w.beta = 1.0;

    const StatisticSeries series = compute_series(ModelSpec::luroth(), LawId::log_weighted, w,
                                                  nullptr, {1000, 10000, 100000}, sopt);
    const DiagTable diag = as_convergence_diag(series, {0.1});
    const std::vector<double> p = phat_at_eps(diag, 0.1);

    bool ok = !p.empty() && p.back() <= kAsFinal;
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[i - 1]) ok = false;

    char fin[32];
    std::snprintf(fin, sizeof fin, "%.3f", p.empty() ? -1.0 : p.back());
    const double secs = t.seconds();
    ok = ok && secs < kStrongLawBudget;
    report(9, ok,
           std::string("strong law, luroth log-weighted sums (beta=1, p=2, rho(n)=n), 200 "
                       "trajectories to 1e5: suffix-sup exceedance of 0.1 nonincreasing over "
                       "{1e3,1e4,1e5}, final ") +
               fin + " <= 0.05",
           secs);
}

// --- c10: covariance/variance bounds ----------------------------------------------

void criterion_10() {
    Timer t;
    VerifyOptions opt;
    opt.seed = 101;
    const std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs{
        {5, 25}, {10, 50}, {20, 100}, {40, 200}};

    const LemmaReport en = verify_cov_bound(ModelSpec::engel(), pairs, 8000, 2.0, opt);

    const LemmaReport lu = verify_cov_bound(ModelSpec::luroth(), pairs, 8000, 2.0, opt);
    bool lu_cov_ok = lu.verdict == Verdict::pass;
    std::size_t cov_rows = 0;
    for (const LemmaRow& row : lu.rows) {
        if (row.note.find("independent ratios") == std::string::npos) continue;
        ++cov_rows;
        if (!(row.lhs <= 3.0 * row.se)) lu_cov_ok = false;
    }
    lu_cov_ok = lu_cov_ok && cov_rows > 0;

    const bool ok = en.verdict == Verdict::pass && lu_cov_ok;
    report(10, ok,
           "covariance/variance bounds, pairs (5,25)..(40,200): engel fit-then-freeze passes "
           "held-out pairs; luroth covariance rows within 3 SE of 0",
           t.seconds());
}

// --- c11: reproducibility ----------------------------------------------------------

void criterion_11() {
    Timer t;
    const char* configs[] = {
        R"({
            "seed": 111,
            "model": {"preset": "luroth"},
            "task": {"kind": "verify", "params": {
                "check": "dominance", "x_grid": [1.5, 2, 5], "samples": 100000
            }}
        })",
        R"({
            "seed": 112,
            "model": {"preset": "luroth"},
            "task": {"kind": "law", "params": {
                "statistic": "centered-p",
                "weights": {"u": 1, "v": 0, "s": 1, "r": 1, "p": 2},
                "n_grid": [100, 1000], "replications": 50, "eps": [0.1],
                "validate": false
            }}
        })"};

    bool ok = true;
    for (int i = 0; i < 2 && ok; ++i) {
        const fs::path base = fs::temp_directory_path() / ("opplab_accept_" + std::to_string(i));
        fs::remove_all(base);
        for (const char* run : {"a", "b"}) {
            ExperimentConfig cfg = parse_config(configs[i]);
            cfg.output_dir = (base / run).string();
            refresh_resolved(cfg);
            if (run_experiment(cfg).exit_code != 0) ok = false;
        }
        if (slurp(base / "a" / "results.csv") != slurp(base / "b" / "results.csv")) ok = false;
        if (slurp(base / "a" / "summary.json") != slurp(base / "b" / "summary.json")) ok = false;
        fs::remove_all(base);
    }

    report(11, ok,
           "reproducibility: verify and law runs repeated with the same config and seed give "
           "byte-identical results.csv and summary.json",
           t.seconds());
}

}  // namespace

int main() {
    std::printf("acceptance gate: 11 criteria\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    if (failures == 0)
        std::printf("all 11 criteria passed\n");
    else
        std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
