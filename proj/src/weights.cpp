#include "opplab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace opplab {

namespace {

// n^x * (log n)^y without paying for pow when the exponent is trivial.
double pow_log_pow(std::uint64_t n, double x, double y) {
    const double nd = static_cast<double>(n);
    double out = 1.0;
    if (x == 1.0)
        out = nd;
    else if (x == -1.0)
        out = 1.0 / nd;
    else if (x != 0.0)
        out = std::pow(nd, x);
    if (y != 0.0) out *= std::pow(std::log(nd), y);
    return out;
}

std::string signature(const char* base, double pow_exp, double log_exp) {
    std::ostringstream os;
    os << base << "^" << pow_exp;
    if (log_exp != 0.0) os << " log^" << log_exp << " " << base;
    return os.str();
}

}  // namespace

double RhoSpec::operator()(std::uint64_t n) const {
    return scale * pow_log_pow(n, e, g);
}

bool RhoSpec::sum_inv_sq_converges() const {
    // sum n^{-2e} log^{-2g} n converges iff 2e > 1, or 2e = 1 and 2g > 1.
    return e > 0.5 || (e == 0.5 && g > 0.5);
}

std::string RhoSpec::describe() const {
    std::ostringstream os;
    os << scale << " * " << signature("n", e, g);
    return os.str();
}

double WeightScheme::a(std::uint64_t j) const { return pow_log_pow(j, -u, v); }

double WeightScheme::b(std::uint64_t n) const { return pow_log_pow(n, s, r); }

double WeightScheme::cap(std::uint64_t j, std::uint64_t n) const {
    return b(n) / a(j);
}

std::uint64_t WeightScheme::b_monotone_from() const {
    // d/dn log b = (s log n + r) / (n log n) >= 0 iff s log n >= -r.
    if (s > 0.0) {
        if (r >= 0.0) return 2;
        const double n_star = std::exp(-r / s);
        return std::max<std::uint64_t>(2, static_cast<std::uint64_t>(std::ceil(n_star)));
    }
    if (s == 0.0 && r >= 0.0) return 2;
    throw std::invalid_argument(
        "WeightScheme: b_n = " + signature("n", s, r) + " is eventually decreasing");
}

void WeightScheme::validate() const {
    if (j0 < 2) throw std::invalid_argument("WeightScheme: j0 must be >= 2");
    if (!(p >= 1.0)) throw std::invalid_argument("WeightScheme: p must be >= 1");
    b_monotone_from();  // throws when b is eventually decreasing
}

std::string WeightScheme::describe() const {
    std::ostringstream os;
    os << "a_j = " << signature("j", -u, v) << ", b_n = " << signature("n", s, r)
       << ", j0 = " << j0 << ", p = " << p;
    return os.str();
}

TriangularArray::TriangularArray(ArrayKind kind, double scale, std::uint64_t horizon,
                                 double m_factor)
    : horizon_(horizon), m_factor_(m_factor), row_constant_(true) {
    switch (kind) {
        case ArrayKind::constant:
            gen_ = [scale](std::uint64_t, std::uint64_t) { return scale; };
            description_ = "c = " + std::to_string(scale);
            break;
        case ArrayKind::inv_n2:
            gen_ = [scale](std::uint64_t n, std::uint64_t) {
                const double nd = static_cast<double>(n);
                return scale / (nd * nd);
            };
            description_ = "c = " + std::to_string(scale) + " / n^2";
            break;
        case ArrayKind::inv_n2_log2:
            gen_ = [scale](std::uint64_t n, std::uint64_t) {
                const double nd = static_cast<double>(n);
                const double ln = std::log(nd);
                return scale / (nd * nd * ln * ln);
            };
            description_ = "c = " + std::to_string(scale) + " / (n^2 log^2 n)";
            break;
    }
    check_bound();
}

TriangularArray::TriangularArray(std::function<double(std::uint64_t, std::uint64_t)> gen,
                                 std::string description, std::uint64_t horizon,
                                 double m_factor)
    : gen_(std::move(gen)),
      description_(std::move(description)),
      horizon_(horizon),
      m_factor_(m_factor),
      row_constant_(false) {
    check_bound();
}

std::uint64_t TriangularArray::m(std::uint64_t n) const {
    const double raw = std::ceil(m_factor_ * static_cast<double>(n));
    return raw < 1.0 ? 1 : static_cast<std::uint64_t>(raw);
}

double TriangularArray::c(std::uint64_t n, std::uint64_t j) const { return gen_(n, j); }

void TriangularArray::check_bound() const {
    if (horizon_ < 2) throw std::invalid_argument("TriangularArray: horizon must be >= 2");
    if (!(m_factor_ > 0.0))
        throw std::invalid_argument("TriangularArray: m_factor must be > 0");
    for (std::uint64_t n = 2; n <= horizon_; ++n) {
        const std::uint64_t mn = m(n);
        // Row-constant kinds need one probe per row.
        const std::uint64_t j_end = row_constant_ ? 1 : mn;
        for (std::uint64_t j = 1; j <= j_end; ++j) {
            const double v = gen_(n, j);
            if (!(std::abs(v) <= 1.0)) {
                std::ostringstream os;
                os << "TriangularArray: |c_{" << n << "," << j << "}| = " << std::abs(v)
                   << " exceeds 1 (array-law hypothesis)";
                throw std::domain_error(os.str());
            }
        }
    }
}

}  // namespace opplab
