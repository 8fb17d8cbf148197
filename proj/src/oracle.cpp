#include "opplab/oracle.hpp"

#include "opplab/quadrature.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace opplab {

double y_tail(const DistributionFamily& f, double x) {
    if (x < 1.0) return 1.0;
    return f.cdf(1.0 / x);
}

double y_trunc_moment(const DistributionFamily& f, double q, double t) {
    if (t < 1.0) throw std::domain_error("oracle: truncation level must be >= 1");
    const double p = 1.0 / t;
    double s = 0.0;
    for (const auto& term : f.terms()) {
        const double d = term.exponent - q;
        if (d == 0.0)
            s += term.weight * term.exponent * std::log(t);
        else
            s += term.weight * term.exponent * (1.0 - std::pow(p, d)) / d;
    }
    return s;
}

double y_trunc_moment_quad(const DistributionFamily& f, double q, double t) {
    if (t < 1.0) throw std::domain_error("oracle: truncation level must be >= 1");
    // E(Y^q ; Y <= t) = int_{1/t}^1 u^(-q) dF(u)
    const auto g = [&](double u) { return std::pow(u, -q) * f.pdf(u); };
    return integrate(g, 1.0 / t, 1.0, 1e-12);
}

double y_tail_moment(const DistributionFamily& f, double q, double t) {
    if (t < 1.0) throw std::domain_error("oracle: truncation level must be >= 1");
    if (q >= f.alpha())
        throw std::domain_error("oracle: E(Y^q; Y>t) diverges for q >= alpha (q=" +
                                std::to_string(q) + ", alpha=" + std::to_string(f.alpha()) +
                                ")");
    const double p = 1.0 / t;
    double s = 0.0;
    for (const auto& term : f.terms()) {
        const double d = term.exponent - q;  // > 0 since exponent >= alpha > q
        s += term.weight * term.exponent * std::pow(p, d) / d;
    }
    return s;
}

double h_function(const DistributionFamily& f, double x) {
    return y_trunc_moment(f, 1.0, x);
}

SlowVariationReport check_slow_variation(const DistributionFamily& f, double t,
                                         double x_max) {
    if (!(t > 1.0)) throw std::invalid_argument("slow variation: need t > 1");
    if (!(x_max >= 1e8)) throw std::invalid_argument("slow variation: need x_max >= 1e8");
    SlowVariationReport rep;
    rep.t = t;
    for (double x = 10.0; x <= x_max * 1.0000001; x *= 10.0) {
        const double hx = h_function(f, x);
        const double ratio = h_function(f, t * x) / hx;
        rep.rows.emplace_back(x, ratio);
        rep.x_end = x;
        rep.ratio_end = ratio;
        if (x > 0.999999e6 && x < 1.000001e6) rep.ratio_at_1e6 = ratio;
    }
    rep.gap_end = std::abs(rep.ratio_end - 1.0);
    rep.pass = rep.gap_end < 0.05;
    return rep;
}

// --- harmonic sums -------------------------------------------------------------

namespace {

// Anchor for the Euler-Maclaurin hop. 1024 keeps the direct prefix cheap while
// the omitted correction terms (f^(5) and beyond) stay under 1e-13 for every
// exponent the oracle meets; the centering engine calls this ~1e5 times per
// run, so the per-call cost past the anchor must stay O(1).
constexpr std::uint64_t kDirectLimit = 1024;

double direct_harmonic(double s, std::uint64_t m) {
    // summed smallest-first to keep the rounding error of the anchor at a few ulps
    double acc = 0.0;
    for (std::uint64_t k = m; k >= 1; --k) acc += std::pow(static_cast<double>(k), -s);
    return acc;
}

// Euler-Maclaurin for sum_{a < k <= b} k^(-s), both endpoints large.
double em_difference(double s, double a, double b) {
    const double integral =
        (s == 1.0) ? std::log(b / a) : (std::pow(b, 1.0 - s) - std::pow(a, 1.0 - s)) / (1.0 - s);
    const double fb = std::pow(b, -s), fa = std::pow(a, -s);
    const double d1b = -s * std::pow(b, -s - 1.0), d1a = -s * std::pow(a, -s - 1.0);
    const double c3 = -s * (s + 1.0) * (s + 2.0);
    const double d3b = c3 * std::pow(b, -s - 3.0), d3a = c3 * std::pow(a, -s - 3.0);
    return integral + 0.5 * (fb - fa) + (d1b - d1a) / 12.0 - (d3b - d3a) / 720.0;
}

}  // namespace

double gen_harmonic(double s, std::uint64_t m) {
    if (!(s > -1.0)) throw std::domain_error("harmonic: need s > -1");
    if (m == 0) return 0.0;
    if (m <= kDirectLimit) return direct_harmonic(s, m);
    thread_local std::map<double, double> anchors;
    auto it = anchors.find(s);
    if (it == anchors.end())
        it = anchors.emplace(s, direct_harmonic(s, kDirectLimit)).first;
    return it->second + em_difference(s, static_cast<double>(kDirectLimit),
                                      static_cast<double>(m));
}

// --- lattice (iid chain) forms ---------------------------------------------------

Rational luroth_er_trunc(const Rational& t) {
    if (t < 0) throw std::domain_error("oracle: t must be nonnegative");
    const BigInt mb = floor_big(t);
    if (mb > 10000000)
        throw std::domain_error("oracle: exact truncated mean capped at m = 1e7");
    const unsigned long m = mb.get_ui();
    Rational s(0);
    for (unsigned long k = 1; k <= m; ++k) s += Rational(BigInt(1), BigInt(k + 1));
    return s + t / Rational(BigInt(m + 1));
}

namespace {

// sum_{k<=m} F(1/k) and sum_{k<=m} k F(1/k) through the power terms.
double sum_f_inv(const DistributionFamily& f, std::uint64_t m) {
    double s = 0.0;
    for (const auto& term : f.terms()) s += term.weight * gen_harmonic(term.exponent, m);
    return s;
}

double sum_kf_inv(const DistributionFamily& f, std::uint64_t m) {
    double s = 0.0;
    for (const auto& term : f.terms())
        s += term.weight * gen_harmonic(term.exponent - 1.0, m);
    return s;
}

std::uint64_t lattice_floor(double t) {
    if (t < 0.0) throw std::domain_error("oracle: t must be nonnegative");
    if (t >= 1.8e18) throw std::domain_error("oracle: truncation level too large");
    return static_cast<std::uint64_t>(std::floor(t));
}

}  // namespace

double iid_r_tail(const DistributionFamily& f, double x) {
    if (x < 1.0) return 1.0;
    // R integer-valued: R > x iff R >= floor(x) + 1
    return f.cdf(1.0 / (std::floor(x) + 1.0));
}

double iid_r_trunc_mean(const DistributionFamily& f, double t) {
    const std::uint64_t m = lattice_floor(t);
    if (m == 0) return 0.0;
    const double md = static_cast<double>(m);
    return sum_f_inv(f, m) - md * f.cdf(1.0 / (md + 1.0));
}

double iid_r_min_mean(const DistributionFamily& f, double t) {
    const std::uint64_t m = lattice_floor(t);
    const double md = static_cast<double>(m);
    const double tail = f.cdf(1.0 / (md + 1.0));  // P(R > m) = P(R > t)
    return (m == 0 ? 0.0 : sum_f_inv(f, m)) + (t - md) * tail;
}

double iid_r_min_sq_mean(const DistributionFamily& f, double t) {
    const std::uint64_t m = lattice_floor(t);
    const double md = static_cast<double>(m);
    const double tail = f.cdf(1.0 / (md + 1.0));
    if (m == 0) return t * t * tail;
    return 2.0 * sum_kf_inv(f, m) - sum_f_inv(f, m) + (t * t - md * md) * tail;
}

TailIdentityReport tail_integral_identity(const DistributionFamily& f, double t) {
    if (t < 1.0) throw std::domain_error("oracle: t must be >= 1");
    TailIdentityReport rep;
    rep.closed = y_trunc_moment(f, 1.0, t) + t * y_tail(f, t);
    // 1 + int_1^t P(Y > x) dx, with x = 1/u pulling the integral onto (0,1]
    const auto g = [&](double u) { return f.cdf(u) / (u * u); };
    rep.integral = 1.0 + integrate(g, 1.0 / t, 1.0, 1e-12);
    rep.gap = std::abs(rep.closed - rep.integral);
    return rep;
}

}  // namespace opplab
