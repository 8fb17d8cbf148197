#include "opplab/stats_util.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace opplab {

MeanSe mean_se(const double* x, std::size_t n) {
    MeanSe out;
    out.n = n;
    if (n == 0) return out;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    out.mean = acc / static_cast<double>(n);
    if (n >= 2)
        out.se = std::sqrt(sample_variance(x, n) / static_cast<double>(n));
    return out;
}

double sample_variance(const double* x, std::size_t n) {
    if (n < 2) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    const double mean = acc / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - mean;
        ss += d * d;
    }
    return ss / static_cast<double>(n - 1);
}

double median(std::vector<double> x) {
    if (x.empty()) throw std::invalid_argument("median: empty sample");
    const std::size_t mid = x.size() / 2;
    std::nth_element(x.begin(), x.begin() + mid, x.end());
    const double hi = x[mid];
    if (x.size() % 2 == 1) return hi;
    std::nth_element(x.begin(), x.begin() + mid - 1, x.begin() + mid);
    return 0.5 * (x[mid - 1] + hi);
}

Interval wilson_ci(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    if (successes > trials) throw std::invalid_argument("wilson_ci: successes > trials");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    // At the boundaries center and half coincide analytically; pin the
    // endpoint so rounding noise cannot leave a sliver.
    const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
    const double hi = successes == trials ? 1.0 : std::min(1.0, center + half);
    return {lo, hi};
}

double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0)
        throw std::domain_error("gamma_q: need a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
    if (x < a + 1.0) {
        // lower series for P(a, x); Q = 1 - P
        double ap = a;
        double del = 1.0 / a;
        double sum = del;
        for (int i = 0; i < 1000; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-16) break;
        }
        return 1.0 - sum * std::exp(log_prefix);
    }
    // modified Lentz continued fraction for Q(a, x)
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(log_prefix) * h;
}

double chi_square_sf(double x, double df) {
    if (!(df > 0.0)) throw std::domain_error("chi_square_sf: need df > 0");
    if (x <= 0.0) return 1.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

ChiSquareResult chi_square_two_sample(const std::vector<std::uint64_t>& counts_a,
                                      const std::vector<std::uint64_t>& counts_b,
                                      std::uint64_t min_combined) {
    if (counts_a.size() != counts_b.size() || counts_a.size() < 2)
        throw std::invalid_argument("chi_square_two_sample: need two aligned vectors, >= 2 cells");

    // Fold low-count cells into the final (tail) cell.
    std::vector<double> a, b;
    a.reserve(counts_a.size());
    b.reserve(counts_b.size());
    ChiSquareResult out;
    double tail_a = static_cast<double>(counts_a.back());
    double tail_b = static_cast<double>(counts_b.back());
    for (std::size_t i = 0; i + 1 < counts_a.size(); ++i) {
        if (counts_a[i] + counts_b[i] < min_combined) {
            tail_a += static_cast<double>(counts_a[i]);
            tail_b += static_cast<double>(counts_b[i]);
            ++out.folded_cells;
        } else {
            a.push_back(static_cast<double>(counts_a[i]));
            b.push_back(static_cast<double>(counts_b[i]));
        }
    }
    a.push_back(tail_a);
    b.push_back(tail_b);

    double na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += a[i];
        nb += b[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw std::invalid_argument("chi_square_two_sample: one sample is empty");

    const double total = na + nb;
    double stat = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double cell = a[i] + b[i];
        if (cell == 0.0) continue;  // empty after folding: no df contribution
        const double ea = na * cell / total;
        const double eb = nb * cell / total;
        stat += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
        ++used;
    }
    if (used < 2) throw std::invalid_argument("chi_square_two_sample: fewer than 2 live cells");
    out.statistic = stat;
    out.df = used - 1;
    out.p_value = chi_square_sf(stat, static_cast<double>(out.df));
    return out;
}

}  // namespace opplab
