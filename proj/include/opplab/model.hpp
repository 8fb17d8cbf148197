#pragma once

// Model layer: the (phi_n, q_n, F_n) triple that defines a generalized digit
// chain, the cell-boundary map delta, the ratio variable, and the grid-based
// condition checkers the law/verification pipelines use as pre-flight.
//
// Conventions, fixed across the lab:
//   delta(phi, k, q) = phi (1+q) / (k + phi q),  defined for k >= ceil(phi),
//   P(B_{n+1} = k | B_n = h, history) = F_n(delta(k)) - F_n(delta(k+1)),
//   R_n = (B_{n+1} + phi_n(B_n) Q_n) / (phi_n(B_n) (1 + Q_n)) = 1/delta(B_{n+1}).
// At k = ceil(phi) the masses telescope to F(delta(k_min)); for non-integral
// phi the boundary cell absorbs the remaining mass (the sampler clamps).

#include "opplab/distribution.hpp"
#include "opplab/rational.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace opplab {

// --- delta and the ratio variable -------------------------------------------

// Exact forms. Throw std::domain_error unless phi > 0, q >= 0, k >= ceil(phi).
Rational delta(const Rational& phi, const BigInt& k, const Rational& q);
Rational r_from_digits(const Rational& phi, const BigInt& k, const Rational& q);

// Float forms for the fast sampling/statistics paths.
double delta_d(double phi, double k, double q);
double r_from_digits_d(double phi, double k, double q);

// --- phi / q descriptors ------------------------------------------------------

enum class PhiKind {
    one,        // phi(h) = 1          (luroth)
    identity,   // phi(h) = h          (engel)
    successor,  // phi(h) = h (h + 1)  (sylvester)
    constant,   // phi(h) = c
    table,      // explicit values for h = 1..len
};

struct PhiSpec {
    PhiKind kind = PhiKind::one;
    Rational constant_value = Rational(1);
    std::vector<Rational> table;  // 1-based digit -> phi value
    bool table_hold_last = false; // beyond the table: hold last entry vs throw

    Rational operator()(const BigInt& h) const;
    // log phi(h) from log h, for the fast sampler once digits outgrow floats.
    double log_phi_from_log_h(double log_h) const;
    std::string describe() const;
};

enum class QKind {
    constant,        // q_n = c >= 0
    inv_last_digit,  // q_n = 1 / B_n (a declared history-dependent form)
};

struct QSpec {
    QKind kind = QKind::constant;
    Rational constant_value = Rational(0);

    Rational operator()(const BigInt& last_digit, std::uint64_t n) const;
    double value_d(double last_digit_log, std::uint64_t n) const;
    std::string describe() const;
};

// --- model -------------------------------------------------------------------

struct ModelSpec {
    std::string name = "custom";
    PhiSpec phi;
    QSpec q;
    // F_0, F_1, ...; a single entry means a stationary family. A chain longer
    // than the list keeps using the last entry.
    std::vector<DistributionFamily> families;
    // Initial digit law: B_1 is drawn with these in place of (phi(B_0), Q_0).
    Rational init_phi = Rational(1);
    Rational init_q = Rational(0);
    // Tail metadata: exponent alpha (and optional constant L) the laws assume.
    double alpha_meta = 1.0;
    std::optional<double> l_meta;

    const DistributionFamily& family_at(std::uint64_t n) const;
    bool stationary() const { return families.size() == 1; }
    bool kind_is_constant() const;
    // R_j are iid exactly when the conditional digit law cannot see history:
    // constant phi, constant q, stationary F.
    bool iid_ratios() const;
    // iid with phi = 1 and q = 0: R sits on the integer lattice with
    // P(R > x) = F(1/(floor(x)+1)), the case the iid_r_* closed forms cover.
    bool unit_iid() const;

    static ModelSpec luroth(DistributionFamily f = DistributionFamily::uniform());
    static ModelSpec engel(DistributionFamily f = DistributionFamily::uniform());
    static ModelSpec sylvester(DistributionFamily f = DistributionFamily::uniform());
};

// --- condition checkers -------------------------------------------------------
//
// All three are grid heuristics and say so in their reports. The shared grid
// contract: strictly decreasing x values in (0,1], smallest <= 1e-6, at least
// 16 points per decade (fewer is a configuration error -> invalid_argument).

std::vector<double> make_ratio_grid(double x_max = 1.0, double x_min = 1e-7,
                                    int points_per_decade = 32);

struct TailRatioReport {
    double l_hat = 0.0;     // sup-style estimate of F(x)/x^alpha near 0
    bool pass = false;
    bool degenerate = false;  // ratio decays to 0 (detected by log-log slope)
    double last_decade_spread = 0.0;  // relative spread over the last decade
    double slope = 0.0;               // fitted log-log slope, last two decades
};

// Checks limsup_{x->0} F(x)/x^alpha < infinity and reports the estimate.
// pass = ratios stabilized (spread < 1e-3) or cleanly decay to zero
// (slope >= 0.5, reported l_hat = 0, degenerate flag set).
TailRatioReport check_cond2f(const DistributionFamily& f, double alpha,
                             const std::vector<double>& x_grid);

// Two-sided version: |F(x)/x^alpha - L| -> 0 for some constant L (x -> 0+).
// Same mechanics; l_hat is the fitted limit.
TailRatioReport check_uniform_power_limit(const DistributionFamily& f, double alpha,
                                          const std::vector<double>& x_grid);

struct LipschitzReport {
    double m_hat = 0.0;  // max difference quotient observed
    bool bounded = false;
    double fine_scale_growth = 0.0;  // quotient growth across dyadic scales
};

// Difference quotients on a uniform grid of `pairs` adjacent pairs, plus
// dyadic pairs (x, 2x), x = 2^-k, to catch slopes blowing up at 0 (alpha < 1).
LipschitzReport check_lipschitz(const DistributionFamily& f, int pairs = 10000);

// Model-level wrappers: run the family checkers across every listed F_n and
// combine (sup of estimates, all must pass).
TailRatioReport check_cond2f(const ModelSpec& m, const std::vector<double>& x_grid);
TailRatioReport check_uniform_power_limit(const ModelSpec& m,
                                          const std::vector<double>& x_grid);
LipschitzReport check_lipschitz(const ModelSpec& m, int pairs = 10000);

}  // namespace opplab
