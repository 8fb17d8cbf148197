#include "opplab/distribution.hpp"

#include <cmath>
#include <stdexcept>

namespace opplab {

namespace {
constexpr int kMonotoneGridPoints = 10000;

int integral_alpha(double alpha) {
    const double r = std::nearbyint(alpha);
    if (r >= 1.0 && r <= 60.0 && alpha == r) return static_cast<int>(r);
    return 0;
}
}  // namespace

DistributionFamily::DistributionFamily(FamilyKind kind, double alpha, double c0, double c1)
    : kind_(kind), alpha_(alpha), c0_(c0), c1_(c1), alpha_int_(integral_alpha(alpha)) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw std::invalid_argument("family: alpha must be positive and finite");
    if (kind == FamilyKind::perturbed_power) {
        if (!std::isfinite(c0) || !std::isfinite(c1))
            throw std::invalid_argument("family: coefficients must be finite");
        if (!(c0 + c1 > 0.0))
            throw std::invalid_argument("family: c0 + c1 must be positive (F(1) = 1 normalization)");
        const double norm = c0 + c1;
        terms_ = {{c0 / norm, alpha}, {c1 / norm, alpha + 1.0}};
        validate_monotone();
    } else {
        c0_ = 1.0;
        c1_ = 0.0;
        terms_ = {{1.0, alpha}};
    }
}

DistributionFamily DistributionFamily::uniform() {
    return DistributionFamily(FamilyKind::uniform, 1.0, 1.0, 0.0);
}

DistributionFamily DistributionFamily::power(double alpha) {
    return DistributionFamily(FamilyKind::power, alpha, 1.0, 0.0);
}

DistributionFamily DistributionFamily::perturbed_power(double alpha, double c0, double c1) {
    return DistributionFamily(FamilyKind::perturbed_power, alpha, c0, c1);
}

std::string DistributionFamily::describe() const {
    switch (kind_) {
        case FamilyKind::uniform:
            return "uniform";
        case FamilyKind::power:
            return "power(alpha=" + std::to_string(alpha_) + ")";
        case FamilyKind::perturbed_power:
            return "perturbed-power(alpha=" + std::to_string(alpha_) + ", c0=" +
                   std::to_string(c0_) + ", c1=" + std::to_string(c1_) + ")";
    }
    return "?";
}

void DistributionFamily::validate_monotone() const {
    // A CDF must not decrease. The power terms guarantee it for nonnegative
    // coefficients; a negative c1 can break it, so check on a fixed grid.
    double prev = 0.0;
    for (int i = 1; i <= kMonotoneGridPoints; ++i) {
        const double x = static_cast<double>(i) / kMonotoneGridPoints;
        const double v = cdf(x);
        if (v < prev)
            throw std::invalid_argument("family: CDF decreases near x=" + std::to_string(x) +
                                        " (bad perturbation coefficients)");
        if (v < 0.0)
            throw std::invalid_argument("family: CDF negative near x=" + std::to_string(x));
        prev = v;
    }
}

double DistributionFamily::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    switch (kind_) {
        case FamilyKind::uniform:
            return x;
        case FamilyKind::power:
            return std::pow(x, alpha_);
        case FamilyKind::perturbed_power:
            return std::pow(x, alpha_) * (c0_ + c1_ * x) / (c0_ + c1_);
    }
    return 0.0;
}

double DistributionFamily::pdf(double x) const {
    if (x <= 0.0 || x > 1.0) return 0.0;
    switch (kind_) {
        case FamilyKind::uniform:
            return 1.0;
        case FamilyKind::power:
            return alpha_ * std::pow(x, alpha_ - 1.0);
        case FamilyKind::perturbed_power:
            return (alpha_ * std::pow(x, alpha_ - 1.0) * (c0_ + c1_ * x) +
                    std::pow(x, alpha_) * c1_) /
                   (c0_ + c1_);
    }
    return 0.0;
}

double DistributionFamily::inv_cdf(double u) const {
    if (!(u > 0.0) || u > 1.0)
        throw std::domain_error("family: inv_cdf argument must lie in (0,1]");
    switch (kind_) {
        case FamilyKind::uniform:
            return u;
        case FamilyKind::power:
            return std::pow(u, 1.0 / alpha_);
        case FamilyKind::perturbed_power:
            break;
    }
    // Safeguarded Newton on [0,1]. cdf is strictly increasing here (monotone
    // grid check at construction rejects flat/decreasing perturbations).
    double lo = 0.0, hi = 1.0;
    double x = std::pow(u, 1.0 / alpha_);  // pure-power seed
    for (int it = 0; it < 120; ++it) {
        const double fx = cdf(x) - u;
        if (fx > 0.0)
            hi = x;
        else
            lo = x;
        const double dfx = pdf(x);
        double step = (dfx > 0.0) ? fx / dfx : 0.0;
        double next = x - step;
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-17 + 1e-16 * x) {
            x = next;
            break;
        }
        x = next;
    }
    return x;
}

double DistributionFamily::limit_ratio() const {
    if (kind_ == FamilyKind::perturbed_power) return c0_ / (c0_ + c1_);
    return 1.0;
}

Rational DistributionFamily::cdf_rational(const Rational& x) const {
    if (!exact_capable())
        throw std::logic_error("family: exact CDF needs an integral alpha, have " +
                               std::to_string(alpha_));
    if (x <= 0) return Rational(0);
    if (x >= 1) return Rational(1);
    const Rational xa = pow_rational(x, static_cast<unsigned>(alpha_int_));
    if (kind_ != FamilyKind::perturbed_power) return xa;
    // Doubles are dyadic rationals, so this stays exact.
    const Rational r0 = rational_from_double(c0_);
    const Rational r1 = rational_from_double(c1_);
    return xa * (r0 + r1 * x) / (r0 + r1);
}

}  // namespace opplab
