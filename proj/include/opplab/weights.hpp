#pragma once

// Weight families for the weak and strong laws: a_j = j^{-u} (log j)^v,
// b_n = n^s (log n)^r, the rho normalizer of the almost-sure law, and the
// triangular arrays c_{nj} of the array-form weak law.

#include <cstdint>
#include <functional>
#include <string>

namespace opplab {

// rho(n) = scale * n^e * (log n)^g. The almost-sure law needs
// sum 1/rho(n)^2 < infinity; that is a property of (e, g), not of the
// finite horizon, so it is exposed symbolically.
struct RhoSpec {
    double scale = 1.0;
    double e = 1.0;
    double g = 0.0;

    double operator()(std::uint64_t n) const;
    bool sum_inv_sq_converges() const;
    std::string describe() const;
};

// a_j = j^{-u} (log j)^v from start index j0, b_n = n^s (log n)^r, exponent p,
// plus the almost-sure-law parameters beta and rho. Sums start at j0 >= 2:
// log 1 = 0 makes the j = 1 weight degenerate for the log-powered families,
// and dropping one term cannot move a limit.
struct WeightScheme {
    double u = 1.0;
    double v = 0.0;
    double s = 1.0;
    double r = 1.0;
    std::uint64_t j0 = 2;
    double p = 2.0;
    double beta = 1.0;
    RhoSpec rho;

    double a(std::uint64_t j) const;
    double b(std::uint64_t n) const;
    // Truncation cap b_n / a_j.
    double cap(std::uint64_t j, std::uint64_t n) const;

    // Smallest n >= 2 from which b is nondecreasing. Throws
    // std::invalid_argument when no such point exists (b eventually
    // decreasing), since every law here divides by b_n.
    std::uint64_t b_monotone_from() const;

    // Structural checks (j0 >= 2, p >= 1, b eventually nondecreasing).
    // Throws std::invalid_argument with the failing field named.
    void validate() const;

    std::string describe() const;
};

// Named c_{nj} generators. All three are constant in j, which is what the
// array-form instances in the lab use; arbitrary generators go through the
// std::function constructor below.
enum class ArrayKind {
    constant,      // c = scale
    inv_n2,        // c = scale / n^2
    inv_n2_log2,   // c = scale / (n^2 log^2 n)
};

// Triangular array c_{nj}, j = 1..m(n), with m(n) = ceil(m_factor * n).
// The array-law hypothesis |c_{nj}| <= 1 is checked at construction over
// n = 2..horizon; violations throw std::domain_error naming the first bad
// entry. Rows at n = 1 are never used (grids start at 2) and the log-powered
// kind is singular there.
class TriangularArray {
public:
    TriangularArray(ArrayKind kind, double scale, std::uint64_t horizon,
                    double m_factor = 1.0);
    TriangularArray(std::function<double(std::uint64_t, std::uint64_t)> gen,
                    std::string description, std::uint64_t horizon,
                    double m_factor = 1.0);

    std::uint64_t m(std::uint64_t n) const;
    double c(std::uint64_t n, std::uint64_t j) const;
    std::uint64_t horizon() const { return horizon_; }
    // True for the named kinds: c(n, j) does not depend on j, so row sums
    // collapse to m(n) * f(c(n)).
    bool row_constant() const { return row_constant_; }
    const std::string& describe() const { return description_; }

private:
    std::function<double(std::uint64_t, std::uint64_t)> gen_;
    std::string description_;
    std::uint64_t horizon_;
    double m_factor_;
    bool row_constant_;

    void check_bound() const;
};

}  // namespace opplab
