#pragma once

// Digit-law CDF families on [0,1].
//
// Every family here is a finite combination of power terms,
//   F(x) = sum_i w_i x^(beta_i)  with F(1) = 1,
// which is what the analytic oracle leans on (closed-form truncated moments)
// and what makes exact-mode sampling possible: when all beta_i are integers,
// F maps rationals to rationals, so digit-cell membership u <= F(delta(k))
// can be decided with exact arithmetic.

#include "opplab/rational.hpp"

#include <string>
#include <vector>

namespace opplab {

enum class FamilyKind { uniform, power, perturbed_power };

class DistributionFamily {
public:
    // F(x) = x
    static DistributionFamily uniform();
    // F(x) = x^alpha, alpha > 0
    static DistributionFamily power(double alpha);
    // F(x) = x^alpha (c0 + c1 x) / (c0 + c1)
    static DistributionFamily perturbed_power(double alpha, double c0, double c1);

    FamilyKind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    double c0() const { return c0_; }
    double c1() const { return c1_; }
    std::string describe() const;

    // F, clamped to [0,1] outside the unit interval.
    double cdf(double x) const;
    // density F' on (0,1)
    double pdf(double x) const;
    // F^{-1} on (0,1]; closed form except for the perturbed family, which
    // uses safeguarded Newton (|F(inv(u)) - u| <= 1e-12, tested).
    double inv_cdf(double u) const;

    // lim_{x->0+} F(x) / x^alpha (the family's own alpha): 1 for pure powers,
    // c0/(c0+c1) for the perturbed family.
    double limit_ratio() const;

    // True when F maps rationals to rationals (alpha integral). The perturbed
    // coefficients are IEEE doubles and therefore exact dyadic rationals.
    bool exact_capable() const { return alpha_int_ >= 1; }
    Rational cdf_rational(const Rational& x) const;  // requires exact_capable()

    // Power-term decomposition: list of (weight, exponent). Weights sum to 1.
    struct PowerTerm {
        double weight;
        double exponent;
    };
    const std::vector<PowerTerm>& terms() const { return terms_; }

private:
    DistributionFamily(FamilyKind kind, double alpha, double c0, double c1);
    void validate_monotone() const;

    FamilyKind kind_;
    double alpha_;
    double c0_ = 1.0;
    double c1_ = 0.0;
    int alpha_int_ = 0;  // alpha when integral and small, else 0
    std::vector<PowerTerm> terms_;
};

}  // namespace opplab
