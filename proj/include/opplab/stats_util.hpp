#pragma once

// Shared numerical statistics: moments with standard errors, medians, Wilson
// intervals for the exceedance tables, and the chi-square survival function
// behind the sampler-equivalence tests.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace opplab {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;  // standard error of the mean (0 for n < 2)
    std::size_t n = 0;
};

MeanSe mean_se(const double* x, std::size_t n);
inline MeanSe mean_se(const std::vector<double>& x) { return mean_se(x.data(), x.size()); }

// Sample variance, n - 1 denominator; 0 for n < 2.
double sample_variance(const double* x, std::size_t n);

// Takes a copy on purpose: nth_element scrambles its input.
double median(std::vector<double> x);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

// Wilson score interval for a binomial proportion. Default z is the 95%
// two-sided normal quantile. trials = 0 returns the vacuous [0, 1].
Interval wilson_ci(std::size_t successes, std::size_t trials,
                   double z = 1.959963984540054);

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a),
// series below a + 1, modified Lentz continued fraction above.
double gamma_q(double a, double x);

// P(X > x) for X ~ chi-square with df degrees of freedom.
double chi_square_sf(double x, double df);

struct ChiSquareResult {
    double statistic = 0.0;
    std::size_t df = 0;
    double p_value = 1.0;
    std::size_t folded_cells = 0;  // low-count cells merged into the tail
};

// Two-sample homogeneity test over aligned count vectors (the last cell is
// the tail bucket by convention). Cells whose combined count falls below
// min_combined are folded into the tail before the statistic is formed, so
// sparse digit bins cannot blow up the statistic.
ChiSquareResult chi_square_two_sample(const std::vector<std::uint64_t>& counts_a,
                                      const std::vector<std::uint64_t>& counts_b,
                                      std::uint64_t min_combined = 10);

}  // namespace opplab
