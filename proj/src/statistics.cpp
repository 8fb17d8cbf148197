#include "opplab/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "opplab/kernels.hpp"
#include "opplab/oracle.hpp"
#include "opplab/parallel.hpp"
#include "opplab/rng.hpp"

namespace opplab {

namespace {

[[noreturn]] void fail_arg(const std::string& msg) { throw std::invalid_argument(msg); }

void check_grid(const std::vector<std::uint64_t>& grid, std::uint64_t lo, const char* who) {
    if (grid.empty()) fail_arg(std::string(who) + ": zero-length grid");
    if (grid.front() < lo)
        fail_arg(std::string(who) + ": grid starts below " + std::to_string(lo));
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (grid[i + 1] <= grid[i]) fail_arg(std::string(who) + ": grid must be strictly increasing");
}

// Cached weight prefixes: w[i] = a_{i+1} for i + 1 >= j0, else 0, so one
// kernel reduction over [0, n) realizes sum_{j=j0}^n. Thread-local; a second
// lookup with a different key may invalidate earlier references, so callers
// hold at most one buffer at a time.
const std::vector<double>& weight_buffer(double u, double v, std::uint64_t j0,
                                         std::uint64_t n) {
    struct Entry {
        double u, v;
        std::uint64_t j0;
        std::vector<double> w;
    };
    thread_local std::vector<Entry> cache;
    Entry* hit = nullptr;
    for (auto& e : cache)
        if (e.u == u && e.v == v && e.j0 == j0) {
            hit = &e;
            break;
        }
    if (hit == nullptr) {
        cache.push_back(Entry{u, v, j0, {}});
        hit = &cache.back();
    }
    WeightScheme formula;
    formula.u = u;
    formula.v = v;
    for (std::uint64_t j = hit->w.size() + 1; j <= n; ++j)
        hit->w.push_back(j < j0 ? 0.0 : formula.a(j));
    return hit->w;
}

void require_lengths(std::span<const double> r, std::uint64_t n, const char* who) {
    if (r.size() < n)
        fail_arg(std::string(who) + ": trajectory holds " + std::to_string(r.size()) +
                 " ratios, statistic needs " + std::to_string(n));
}

void require_centering(std::span<const double> centering, std::uint64_t n, const char* who) {
    if (centering.size() < n)
        fail_arg(std::string(who) + ": centering table holds " +
                 std::to_string(centering.size()) + " entries, statistic needs " +
                 std::to_string(n));
}

double centered_weighted_sum(std::span<const double> r, const WeightScheme& w,
                             std::uint64_t n, std::span<const double> centering,
                             const char* who) {
    if (n < w.j0) fail_arg(std::string(who) + ": n below the start index j0");
    require_lengths(r, n, who);
    require_centering(centering, n, who);
    const auto& wb = weight_buffer(w.u, w.v, w.j0, n);
    return kernels::dot(wb.data(), r.data(), n) -
           kernels::dot(wb.data(), centering.data(), n);
}

}  // namespace

const char* law_name(LawId id) {
    switch (id) {
        case LawId::centered_p: return "centered-p";
        case LawId::raw_p: return "raw-p";
        case LawId::centered: return "centered";
        case LawId::triangular: return "triangular";
        case LawId::log_weighted: return "log-weighted";
    }
    return "?";
}

const char* law_formula(LawId id) {
    switch (id) {
        case LawId::centered_p:
            return "b_n^-p sum_{j=j0}^n a_j (R_j - E min(R_j, b_n/a_j))";
        case LawId::raw_p:
            return "b_n^-p sum_{j=j0}^n a_j R_j";
        case LawId::centered:
            return "b_n^-1 sum_{j=j0}^n a_j (R_j - E min(R_j, b_n/a_j))";
        case LawId::triangular:
            return "sum_{j=1}^{m_n} c_nj (R_j - E(R_j 1{|c_nj| R_j <= 1}))";
        case LawId::log_weighted:
            return "(rho(n) log^beta n)^-1 sum_{j=2}^n (log^{beta-p} j / j) R_j";
    }
    return "?";
}

bool law_uses_centering(LawId id) {
    return id == LawId::centered_p || id == LawId::centered || id == LawId::triangular;
}

double truncate_r(double r_val, double cap) {
    if (!(cap > 0.0)) fail_arg("truncate_r: cap must be > 0");
    return std::min(r_val, cap);
}

double stat_centered_p(std::span<const double> r, const WeightScheme& w, std::uint64_t n,
                 std::span<const double> centering) {
    const double num = centered_weighted_sum(r, w, n, centering, "stat_centered_p");
    return num / std::pow(w.b(n), w.p);
}

double stat_raw_p(std::span<const double> r, const WeightScheme& w, std::uint64_t n) {
    if (n < w.j0) fail_arg("stat_raw_p: n below the start index j0");
    require_lengths(r, n, "stat_raw_p");
    const auto& wb = weight_buffer(w.u, w.v, w.j0, n);
    return kernels::dot(wb.data(), r.data(), n) / std::pow(w.b(n), w.p);
}

double stat_centered(std::span<const double> r, const WeightScheme& w, std::uint64_t n,
                 std::span<const double> centering) {
    const double num = centered_weighted_sum(r, w, n, centering, "stat_centered");
    return num / w.b(n);
}

double stat_triangular(std::span<const double> r, const TriangularArray& arr, std::uint64_t n,
                 std::span<const double> centering) {
    const std::uint64_t mn = arr.m(n);
    require_lengths(r, mn, "stat_triangular");
    require_centering(centering, mn, "stat_triangular");
    double acc = 0.0;
    for (std::uint64_t j = 1; j <= mn; ++j) {
        const double c = arr.c(n, j);
        if (!(std::abs(c) <= 1.0)) {
            std::ostringstream os;
            os << "stat_triangular: |c_{" << n << "," << j << "}| = " << std::abs(c)
               << " exceeds 1 (array-law hypothesis)";
            throw std::domain_error(os.str());
        }
        acc += c * (r[j - 1] - centering[j - 1]);
    }
    return acc;
}

double stat_log_weighted(std::span<const double> r, const WeightScheme& w, std::uint64_t n) {
    if (!(w.p >= 2.0)) throw std::domain_error("stat_log_weighted: p must be >= 2");
    if (!(w.beta > 0.0)) throw std::domain_error("stat_log_weighted: beta must be > 0");
    if (n < 2) fail_arg("stat_log_weighted: n below the start index 2");
    require_lengths(r, n, "stat_log_weighted");
    const auto& wb = weight_buffer(1.0, w.beta - w.p, 2, n);
    const double num = kernels::dot(wb.data(), r.data(), n);
    const double ln = std::log(static_cast<double>(n));
    return num / (w.rho(n) * std::pow(ln, w.beta));
}

// -----------------------------------------------------------------------------
// Centering tables.

namespace {

// Truncated-sample transform for the Monte-Carlo table: capped value for the
// centered weighted laws, dropped-above-cap value for the array law.
double mc_sample(double r, double cap, bool indicator_form) {
    if (indicator_form) return r <= cap ? r : 0.0;
    return std::min(r, cap);
}

}  // namespace

CenteringTable centering_for(const ModelSpec& model, LawId id, const WeightScheme& w,
                             const TriangularArray* arr,
                             const std::vector<std::uint64_t>& grid,
                             const CenteringOptions& opt) {
    CenteringTable out;
    if (!law_uses_centering(id)) {
        out.stat_se.assign(grid.size(), 0.0);
        return out;
    }
    const bool array_form = id == LawId::triangular;
    if (array_form && arr == nullptr)
        fail_arg("centering_for: the array law needs a triangular array");
    check_grid(grid, 2, "centering_for");

    const auto row_length = [&](std::uint64_t n) { return array_form ? arr->m(n) : n; };

    out.values.resize(grid.size());
    out.stat_se.assign(grid.size(), 0.0);

    if (model.unit_iid()) {
        const DistributionFamily& f = model.family_at(0);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const std::uint64_t n = grid[g];
            auto& row = out.values[g];
            row.assign(row_length(n), 0.0);
            if (array_form) {
                if (arr->row_constant()) {
                    const double c = arr->c(n, 1);
                    const double d =
                        c == 0.0 ? 0.0 : iid_r_trunc_mean(f, 1.0 / std::abs(c));
                    std::fill(row.begin(), row.end(), d);
                } else {
                    for (std::uint64_t j = 1; j <= row.size(); ++j) {
                        const double c = arr->c(n, j);
                        row[j - 1] =
                            c == 0.0 ? 0.0 : iid_r_trunc_mean(f, 1.0 / std::abs(c));
                    }
                }
            } else {
                for (std::uint64_t j = w.j0; j <= n; ++j)
                    row[j - 1] = iid_r_min_mean(f, w.cap(j, n));
            }
        }
        out.exact = true;
        return out;
    }

    // Monte-Carlo fallback on the dedicated centering streams. Deliberately
    // serial: the table's bytes must depend only on (seed, trajectories),
    // never on how many workers the host happens to have.
    const std::size_t trajs = opt.mc_trajectories;
    if (trajs < 2) fail_arg("centering_for: need at least 2 Monte-Carlo trajectories");

    std::vector<std::vector<double>> caps(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const std::uint64_t n = grid[g];
        auto& cg = caps[g];
        cg.assign(row_length(n), 0.0);
        if (array_form) {
            for (std::uint64_t j = 1; j <= cg.size(); ++j) {
                const double c = arr->c(n, j);
                // cap 0 marks c = 0: the term never contributes, record 0.
                cg[j - 1] = c == 0.0 ? 0.0 : 1.0 / std::abs(c);
            }
        } else {
            for (std::uint64_t j = w.j0; j <= n; ++j) cg[j - 1] = w.cap(j, n);
        }
    }

    std::vector<std::vector<double>> sum(grid.size()), sumsq(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        sum[g].assign(caps[g].size(), 0.0);
        sumsq[g].assign(caps[g].size(), 0.0);
    }

    const std::uint64_t length = row_length(grid.back());
    std::vector<double> rbuf;
    rbuf.reserve(length);
    for (std::size_t t = 0; t < trajs; ++t) {
        RandomStream rng(opt.seed, StreamSpace::centering, t);
        ChainSampler sampler(model, rng, opt.sampler);
        rbuf.clear();
        for (std::uint64_t i = 0; i < length; ++i) rbuf.push_back(sampler.next_ratio());
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const std::uint64_t first = array_form ? 1 : w.j0;
            for (std::uint64_t j = first; j <= caps[g].size(); ++j) {
                const double cap = caps[g][j - 1];
                if (cap == 0.0) continue;
                const double x = mc_sample(rbuf[j - 1], cap, array_form);
                sum[g][j - 1] += x;
                sumsq[g][j - 1] += x * x;
            }
        }
    }

    const double k = static_cast<double>(trajs);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const std::uint64_t n = grid[g];
        const std::size_t len = caps[g].size();
        auto& row = out.values[g];
        row.assign(len, 0.0);
        std::vector<double> se(len, 0.0);
        for (std::size_t i = 0; i < len; ++i) {
            const double mean = sum[g][i] / k;
            row[i] = mean;
            const double var = std::max(0.0, (sumsq[g][i] - k * mean * mean) / (k - 1.0));
            se[i] = std::sqrt(var / k);
        }
        // Conservative SE of the statistic's centering offset: triangle
        // inequality over the weighted per-j errors.
        if (array_form) {
            double acc = 0.0;
            for (std::uint64_t j = 1; j <= len; ++j)
                acc += std::abs(arr->c(n, j)) * se[j - 1];
            out.stat_se[g] = acc;
        } else {
            const auto& wb = weight_buffer(w.u, w.v, w.j0, n);
            const double acc = kernels::dot(wb.data(), se.data(), n);
            const double norm =
                id == LawId::centered_p ? std::pow(w.b(n), w.p) : w.b(n);
            out.stat_se[g] = acc / norm;
        }
    }
    out.exact = false;
    return out;
}

// -----------------------------------------------------------------------------
// Replication series.

StatisticSeries compute_series(const ModelSpec& model, LawId id, const WeightScheme& w,
                               const TriangularArray* arr,
                               const std::vector<std::uint64_t>& grid,
                               const SeriesOptions& opt) {
    if (id == LawId::triangular) {
        if (arr == nullptr) fail_arg("compute_series: the array law needs a triangular array");
        check_grid(grid, 2, "compute_series");
        if (grid.back() > arr->horizon())
            fail_arg("compute_series: grid exceeds the array horizon, |c| <= 1 unchecked there");
    } else {
        w.validate();
        check_grid(grid, std::max<std::uint64_t>(2, w.j0), "compute_series");
        if (id == LawId::log_weighted) {
            if (!(w.p >= 2.0)) throw std::domain_error("stat_log_weighted: p must be >= 2");
            if (!(w.beta > 0.0)) throw std::domain_error("stat_log_weighted: beta must be > 0");
        }
    }
    if (opt.replications == 0) fail_arg("compute_series: need at least one replication");

    StatisticSeries out;
    out.id = id;
    out.n_grid = grid;
    out.centering_stat_se.assign(grid.size(), 0.0);

    CenteringTable cent;
    if (law_uses_centering(id)) {
        CenteringOptions copt;
        copt.mc_trajectories = opt.centering_trajectories;
        copt.seed = opt.seed;
        copt.sampler = opt.sampler;
        cent = centering_for(model, id, w, arr, grid, copt);
        out.centering_exact = cent.exact;
        out.centering_stat_se = cent.stat_se;
    }

    const std::uint64_t length =
        id == LawId::triangular ? arr->m(grid.back()) : grid.back();
    out.values.assign(opt.replications, std::vector<double>(grid.size(), 0.0));

    run_indexed(opt.replications, effective_threads(opt.threads), [&](std::size_t rep) {
        thread_local std::vector<double> rbuf;
        rbuf.clear();
        rbuf.reserve(length);
        RandomStream rng(opt.seed, StreamSpace::main, rep);
        ChainSampler sampler(model, rng, opt.sampler);
        for (std::uint64_t i = 0; i < length; ++i) rbuf.push_back(sampler.next_ratio());
        auto& row = out.values[rep];
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const std::uint64_t n = grid[g];
            switch (id) {
                case LawId::centered_p:
                    row[g] = stat_centered_p(rbuf, w, n, cent.values[g]);
                    break;
                case LawId::raw_p:
                    row[g] = stat_raw_p(rbuf, w, n);
                    break;
                case LawId::centered:
                    row[g] = stat_centered(rbuf, w, n, cent.values[g]);
                    break;
                case LawId::triangular:
                    row[g] = stat_triangular(rbuf, *arr, n, cent.values[g]);
                    break;
                case LawId::log_weighted:
                    row[g] = stat_log_weighted(rbuf, w, n);
                    break;
            }
        }
    });
    return out;
}

// -----------------------------------------------------------------------------
// Hypothesis validators.

namespace {

// Growth order of sum_{j<=n} j^{-x} log^y j, as exponents of n and log n.
struct SumRate {
    bool bounded = false;
    bool loglog = false;
    double n_exp = 0.0;
    double log_exp = 0.0;
};

SumRate sum_rate(double x, double y) {
    SumRate r;
    if (x < 1.0) {
        r.n_exp = 1.0 - x;
        r.log_exp = y;
    } else if (x == 1.0 && y > -1.0) {
        r.log_exp = y + 1.0;
    } else if (x == 1.0 && y == -1.0) {
        r.loglog = true;
    } else {
        r.bounded = true;
    }
    return r;
}

std::string format_rate(const SumRate& r) {
    std::ostringstream os;
    os << "~ ";
    bool printed = false;
    if (r.loglog) {
        os << "loglog n";
        printed = true;
    }
    if (!r.bounded && r.n_exp != 0.0) {
        if (printed) os << " * ";
        os << "n^" << r.n_exp;
        printed = true;
    }
    if (!r.bounded && r.log_exp != 0.0) {
        if (printed) os << " * ";
        os << "log^" << r.log_exp << " n";
        printed = true;
    }
    if (!printed) os << "const";
    return os.str();
}

// PASS heuristics, finite horizon. Vanishing rows must fall strictly across
// every grid pair whose right endpoint sits in the last half-decade and
// finish below half the first grid value. Bounded rows may grow at most 5%
// from mid-grid to the end.
void finish_vanishing(ConditionTrend& row) {
    row.final_value = row.values.back();
    const double tail_from = static_cast<double>(row.grid.back()) / std::sqrt(10.0);
    bool any_pair = false;
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < row.grid.size(); ++i) {
        if (static_cast<double>(row.grid[i + 1]) < tail_from) continue;
        any_pair = true;
        if (!(row.values[i + 1] < row.values[i])) decreasing = false;
    }
    row.tail_decreasing = any_pair && decreasing;
    row.bounded_mode = false;
    row.pass = row.tail_decreasing && row.final_value < 0.5 * row.values.front();
}

void finish_bounded(ConditionTrend& row) {
    row.final_value = row.values.back();
    const double mid = row.values[row.values.size() / 2];
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < row.values.size(); ++i)
        if (!(row.values[i + 1] < row.values[i])) decreasing = false;
    row.tail_decreasing = decreasing;
    row.bounded_mode = true;
    row.pass = row.final_value <= mid * 1.05 || row.final_value <= 0.0;
}

void check_validation_inputs(std::uint64_t horizon, const std::vector<std::uint64_t>& grid) {
    if (horizon < 1000) fail_arg("validate_weights: horizon must be >= 1000");
    check_grid(grid, 2, "validate_weights");
    if (grid.size() < 2) fail_arg("validate_weights: need at least two grid points");
    if (grid.back() > horizon) fail_arg("validate_weights: grid exceeds the horizon");
}

// Cumulative sum_{j>=start}^n summand(j) evaluated at each grid point.
template <typename F>
std::vector<double> cumulative_at(const std::vector<std::uint64_t>& grid,
                                  std::uint64_t start, F&& summand) {
    std::vector<double> out;
    out.reserve(grid.size());
    double acc = 0.0;
    std::uint64_t j = start;
    for (std::uint64_t n : grid) {
        for (; j <= n; ++j) acc += summand(j);
        out.push_back(acc);
    }
    return out;
}

}  // namespace

WeightValidation validate_weights(LawId id, const WeightScheme& w, double alpha,
                                  std::uint64_t horizon,
                                  const std::vector<std::uint64_t>& grid) {
    check_validation_inputs(horizon, grid);
    w.validate();
    if (!(alpha > 0.0)) fail_arg("validate_weights: alpha must be > 0");

    WeightValidation out;
    out.id = id;

    // Weight sums start at j = 1 like the conditions themselves; only a
    // negative log power makes the j = 1 weight singular (log 1 = 0).
    const std::uint64_t sum_start = w.v < 0.0 ? 2 : 1;
    WeightScheme formula = w;

    switch (id) {
        case LawId::centered_p:
        case LawId::raw_p: {
            ConditionTrend lemma_row;
            lemma_row.condition = "sum_{j<=n} a_j^alpha / b_n^alpha";
            lemma_row.grid = grid;
            lemma_row.values = cumulative_at(grid, sum_start, [&](std::uint64_t j) {
                return alpha == 1.0 ? formula.a(j) : std::pow(formula.a(j), alpha);
            });
            for (std::size_t g = 0; g < grid.size(); ++g)
                lemma_row.values[g] /= std::pow(w.b(grid[g]), alpha);
            {
                SumRate rate = sum_rate(w.u * alpha, w.v * alpha);
                rate.n_exp -= w.s * alpha;
                rate.log_exp -= w.r * alpha;
                if (rate.bounded) {
                    rate.bounded = false;
                    rate.n_exp = -w.s * alpha;
                    rate.log_exp = -w.r * alpha;
                }
                lemma_row.rate_note = format_rate(rate);
            }
            finish_vanishing(lemma_row);
            out.conditions.push_back(std::move(lemma_row));

            ConditionTrend norm_row;
            norm_row.condition = "n / b_n^(p-1)";
            norm_row.grid = grid;
            for (std::uint64_t n : grid)
                norm_row.values.push_back(static_cast<double>(n) /
                                          std::pow(w.b(n), w.p - 1.0));
            {
                SumRate rate;
                rate.n_exp = 1.0 - w.s * (w.p - 1.0);
                rate.log_exp = -w.r * (w.p - 1.0);
                norm_row.rate_note = format_rate(rate);
            }
            finish_vanishing(norm_row);
            out.conditions.push_back(std::move(norm_row));
            break;
        }
        case LawId::centered: {
            const double e = std::min(alpha, 1.0);
            ConditionTrend row;
            row.condition = "n sum_{j<=n} (a_j/b_n)^min(alpha,1)";
            row.grid = grid;
            row.values = cumulative_at(grid, sum_start, [&](std::uint64_t j) {
                return e == 1.0 ? formula.a(j) : std::pow(formula.a(j), e);
            });
            for (std::size_t g = 0; g < grid.size(); ++g)
                row.values[g] *= static_cast<double>(grid[g]) / std::pow(w.b(grid[g]), e);
            {
                SumRate rate = sum_rate(w.u * e, w.v * e);
                const bool sum_bounded = rate.bounded;
                rate.bounded = false;
                if (sum_bounded) {
                    rate.n_exp = 0.0;
                    rate.log_exp = 0.0;
                }
                rate.n_exp += 1.0 - w.s * e;
                rate.log_exp -= w.r * e;
                row.rate_note = format_rate(rate);
            }
            finish_vanishing(row);
            out.conditions.push_back(std::move(row));
            break;
        }
        case LawId::log_weighted: {
            ConditionTrend row;
            row.condition = "sum_{k<=n} 1/rho(k)^2";
            row.grid = grid;
            row.values = cumulative_at(grid, 2, [&](std::uint64_t j) {
                const double rho = w.rho(j);
                return 1.0 / (rho * rho);
            });
            row.rate_note = w.rho.sum_inv_sq_converges()
                                ? "series converges (2e > 1, or 2e = 1 with 2g > 1)"
                                : "series diverges";
            finish_bounded(row);
            row.pass = row.pass && w.rho.sum_inv_sq_converges();
            out.conditions.push_back(std::move(row));
            break;
        }
        case LawId::triangular:
            fail_arg("validate_weights: the array law takes a triangular array, not a weight scheme");
    }

    out.pass = std::all_of(out.conditions.begin(), out.conditions.end(),
                           [](const ConditionTrend& c) { return c.pass; });
    return out;
}

WeightValidation validate_weights(const ModelSpec& model, const TriangularArray& arr,
                                  std::uint64_t horizon,
                                  const std::vector<std::uint64_t>& grid) {
    check_validation_inputs(horizon, grid);
    if (grid.back() > arr.horizon())
        fail_arg("validate_weights: grid exceeds the array horizon");

    WeightValidation out;
    out.id = LawId::triangular;

    ConditionTrend bound_row;
    bound_row.condition = "max_j |c_nj|";
    ConditionTrend square_row;
    square_row.condition = "m_n sum_{j<=m_n} c_nj^2";
    ConditionTrend h_row;
    h_row.condition = "m_n sum_{j<=m_n} |c_nj| H_j(1/|c_nj|)";
    bound_row.grid = square_row.grid = h_row.grid = grid;

    for (std::uint64_t n : grid) {
        const std::uint64_t mn = arr.m(n);
        const double m = static_cast<double>(mn);
        double cmax = 0.0, csq = 0.0, ch = 0.0;
        if (arr.row_constant()) {
            const double c = std::abs(arr.c(n, 1));
            cmax = c;
            csq = m * c * c;
            if (c > 0.0) ch = m * c * h_function(model.family_at(1), 1.0 / c);
        } else {
            for (std::uint64_t j = 1; j <= mn; ++j) {
                const double c = std::abs(arr.c(n, j));
                cmax = std::max(cmax, c);
                csq += c * c;
                if (c > 0.0) ch += c * h_function(model.family_at(j), 1.0 / c);
            }
        }
        bound_row.values.push_back(cmax);
        square_row.values.push_back(m * csq);
        h_row.values.push_back(m * ch);
    }

    bound_row.rate_note = "array hypothesis |c| <= 1, checked at construction";
    finish_bounded(bound_row);
    bound_row.pass = bound_row.final_value <= 1.0;
    finish_vanishing(square_row);
    finish_bounded(h_row);

    out.conditions.push_back(std::move(bound_row));
    out.conditions.push_back(std::move(square_row));
    out.conditions.push_back(std::move(h_row));
    out.pass = std::all_of(out.conditions.begin(), out.conditions.end(),
                           [](const ConditionTrend& c) { return c.pass; });
    return out;
}

// -----------------------------------------------------------------------------
// Convergence diagnostics.

namespace {

void check_series(const StatisticSeries& s, const std::vector<double>& eps, const char* who) {
    if (s.values.empty()) fail_arg(std::string(who) + ": empty series");
    if (s.n_grid.empty()) fail_arg(std::string(who) + ": series has no grid");
    if (eps.empty()) fail_arg(std::string(who) + ": need at least one epsilon");
    for (double e : eps)
        if (!(e > 0.0)) fail_arg(std::string(who) + ": epsilon levels must be > 0");
    for (const auto& row : s.values)
        if (row.size() != s.n_grid.size())
            fail_arg(std::string(who) + ": ragged replication matrix");
}

double centering_se_at(const StatisticSeries& s, std::size_t g) {
    if (s.centering_exact || g >= s.centering_stat_se.size()) return 0.0;
    return s.centering_stat_se[g];
}

}  // namespace

DiagTable prob_convergence_diag(const StatisticSeries& series,
                                const std::vector<double>& eps) {
    check_series(series, eps, "prob_convergence_diag");
    DiagTable table;
    table.id = series.id;
    table.low_power = series.values.size() < 100;
    const std::size_t reps = series.values.size();
    for (double e : eps) {
        for (std::size_t g = 0; g < series.n_grid.size(); ++g) {
            DiagRow row;
            row.n = series.n_grid[g];
            row.eps = e;
            row.eps_effective = e + 3.0 * centering_se_at(series, g);
            for (std::size_t rep = 0; rep < reps; ++rep)
                if (std::abs(series.values[rep][g]) > row.eps_effective) ++row.exceed;
            row.total = reps;
            row.p_hat = static_cast<double>(row.exceed) / static_cast<double>(reps);
            row.ci = wilson_ci(row.exceed, reps);
            table.rows.push_back(row);
        }
    }
    return table;
}

DiagTable as_convergence_diag(const StatisticSeries& series,
                              const std::vector<double>& eps) {
    check_series(series, eps, "as_convergence_diag");
    DiagTable table;
    table.id = series.id;
    table.low_power = series.values.size() < 100;
    const std::size_t reps = series.values.size();
    const std::size_t points = series.n_grid.size();

    // Suffix sups over the grid, per trajectory, and the matching suffix sup
    // of the centering SE so the inflation stays conservative.
    std::vector<std::vector<double>> sup(reps, std::vector<double>(points, 0.0));
    for (std::size_t rep = 0; rep < reps; ++rep) {
        double running = 0.0;
        for (std::size_t g = points; g-- > 0;) {
            running = std::max(running, std::abs(series.values[rep][g]));
            sup[rep][g] = running;
        }
    }
    std::vector<double> se_sup(points, 0.0);
    {
        double running = 0.0;
        for (std::size_t g = points; g-- > 0;) {
            running = std::max(running, centering_se_at(series, g));
            se_sup[g] = running;
        }
    }

    for (double e : eps) {
        for (std::size_t g = 0; g < points; ++g) {
            DiagRow row;
            row.n = series.n_grid[g];
            row.eps = e;
            row.eps_effective = e + 3.0 * se_sup[g];
            for (std::size_t rep = 0; rep < reps; ++rep)
                if (sup[rep][g] > row.eps_effective) ++row.exceed;
            row.total = reps;
            row.p_hat = static_cast<double>(row.exceed) / static_cast<double>(reps);
            row.ci = wilson_ci(row.exceed, reps);
            table.rows.push_back(row);
        }
    }
    return table;
}

}  // namespace opplab
