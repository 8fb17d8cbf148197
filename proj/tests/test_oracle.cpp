#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "opplab/oracle.hpp"
#include "opplab/quadrature.hpp"

#include <cmath>
#include <stdexcept>

using namespace opplab;

namespace {
const DistributionFamily kUniform = DistributionFamily::uniform();
const DistributionFamily kPower2 = DistributionFamily::power(2.0);
const DistributionFamily kPerturbed = DistributionFamily::perturbed_power(1.0, 2.0, 1.0);
}  // namespace

TEST_CASE("quadrature baseline") {
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, M_PI) ==
          doctest::Approx(2.0).epsilon(1e-11));
    bool conv = true;
    CHECK(integrate([](double x) { return 1.0 / x; }, 1.0, 2.0, 1e-12, 20, &conv) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(conv);
}

TEST_CASE("y tail") {
    CHECK(y_tail(kUniform, 2.0) == 0.5);
    CHECK(y_tail(kUniform, 0.5) == 1.0);  // Y >= 1 always
    CHECK(y_tail(kPower2, 4.0) == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
}

TEST_CASE("truncated moments, closed forms") {
    // uniform: H(x) = log x
    CHECK(y_trunc_moment(kUniform, 1.0, 2.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(h_function(kUniform, std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-14));
    // power 2: H(x) = 2 (1 - 1/x)
    CHECK(h_function(kPower2, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(h_function(kPower2, 1e9) == doctest::Approx(2.0).epsilon(1e-8));
    // q = beta hits the log branch: E(Y^2 ; Y <= t) = 2 log t for power 2
    CHECK(y_trunc_moment(kPower2, 2.0, 5.0) == doctest::Approx(2.0 * std::log(5.0)).epsilon(1e-14));
    // q = 0 reduces to the probability P(Y <= t)
    CHECK(y_trunc_moment(kUniform, 0.0, 2.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(y_trunc_moment(kUniform, 1.0, 1.0) == 0.0);
    CHECK_THROWS_AS(y_trunc_moment(kUniform, 1.0, 0.5), std::domain_error);
}

TEST_CASE("closed forms agree with quadrature") {
    struct Row {
        const DistributionFamily* f;
        double q, t;
    };
    const Row rows[] = {
        {&kUniform, 1.0, 7.0},   {&kUniform, 0.5, 3.0},  {&kPower2, 1.0, 10.0},
        {&kPower2, 2.0, 4.0},    {&kPerturbed, 1.0, 6.0}, {&kPerturbed, 0.3, 2.5},
    };
    for (const auto& r : rows) {
        CAPTURE(r.q);
        CAPTURE(r.t);
        CHECK(y_trunc_moment(*r.f, r.q, r.t) ==
              doctest::Approx(y_trunc_moment_quad(*r.f, r.q, r.t)).epsilon(1e-9));
    }
}

TEST_CASE("tail moments") {
    // E(Y^0.5 ; Y > 4) = int_0^{1/4} u^{-1/2} du = 1 for uniform
    CHECK(y_tail_moment(kUniform, 0.5, 4.0) == doctest::Approx(1.0).epsilon(1e-14));
    // power 2: E(Y ; Y > t) = 2/t
    CHECK(y_tail_moment(kPower2, 1.0, 10.0) == doctest::Approx(0.2).epsilon(1e-14));
    // diverges at q >= alpha
    CHECK_THROWS_AS(y_tail_moment(kUniform, 1.0, 4.0), std::domain_error);
    CHECK_THROWS_AS(y_tail_moment(kPower2, 2.5, 4.0), std::domain_error);
    // full moment stitches: E(Y^q) = trunc(t) + tail(t)
    const double m1 = y_trunc_moment(kPower2, 1.0, 7.0) + y_tail_moment(kPower2, 1.0, 7.0);
    CHECK(m1 == doctest::Approx(2.0).epsilon(1e-14));  // E(Y) = 2 for power 2
}

TEST_CASE("slow variation of H") {
    SlowVariationReport u2 = check_slow_variation(kUniform, 2.0);
    CHECK(u2.pass);
    CHECK(u2.x_end == doctest::Approx(1e21).epsilon(1e-9));
    CHECK(u2.gap_end == doctest::Approx(std::log(2.0) / std::log(1e21)).epsilon(1e-6));
    // the documented borderline row: log(2e6)/log(1e6) = 1.0502
    CHECK(u2.ratio_at_1e6 == doctest::Approx(1.0502).epsilon(1e-4));
    // gaps shrink monotonically along the decades
    for (std::size_t i = 1; i < u2.rows.size(); ++i)
        CHECK(std::abs(u2.rows[i].second - 1.0) < std::abs(u2.rows[i - 1].second - 1.0));

    SlowVariationReport u10 = check_slow_variation(kUniform, 10.0);
    CHECK(u10.pass);  // 1 + log 10 / log 1e21 = 1.0476, just under the gate

    SlowVariationReport p2 = check_slow_variation(kPower2, 2.0);
    CHECK(p2.pass);
    CHECK(p2.gap_end < 1e-12);  // H converges to 2, ratios collapse fast

    CHECK_THROWS_AS(check_slow_variation(kUniform, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(check_slow_variation(kUniform, 2.0, 1e6), std::invalid_argument);
}

TEST_CASE("generalized harmonic sums") {
    CHECK(gen_harmonic(1.0, 10) == doctest::Approx(7381.0 / 2520.0).epsilon(1e-15));
    CHECK(gen_harmonic(2.0, 3) == doctest::Approx(49.0 / 36.0).epsilon(1e-15));
    CHECK(gen_harmonic(0.0, 1000) == doctest::Approx(1000.0).epsilon(1e-15));
    CHECK(gen_harmonic(1.0, 0) == 0.0);
    CHECK_THROWS_AS(gen_harmonic(-1.0, 10), std::domain_error);

    // asymptotics: H_m = log m + gamma + O(1/m)
    const double gamma = 0.5772156649015329;
    CHECK(gen_harmonic(1.0, 100000000) ==
          doctest::Approx(std::log(1e8) + gamma).epsilon(1e-9));
    // the acceptance-scale proxy value
    CHECK(gen_harmonic(1.0, 10000) / std::pow(std::log(1e4), 2.0) ==
          doctest::Approx(0.11538).epsilon(1e-3));
}

TEST_CASE("euler-maclaurin splices cleanly at the anchor") {
    const std::uint64_t anchor = 1ULL << 20;
    for (double s : {0.5, 1.0, 1.7, 2.0, 3.0}) {
        CAPTURE(s);
        // recompute the straddling values directly, smallest terms first
        for (std::uint64_t m : {anchor - 1, anchor, anchor + 1, anchor + 7}) {
            double direct = 0.0;
            for (std::uint64_t k = m; k >= 1; --k)
                direct += std::pow(static_cast<double>(k), -s);
            CHECK(gen_harmonic(s, m) == doctest::Approx(direct).epsilon(1e-12));
        }
    }
}

TEST_CASE("exact luroth truncated mean") {
    CHECK(luroth_er_trunc(Rational(1)) == Rational(1));
    CHECK(luroth_er_trunc(Rational(3)) == Rational(11, 6));
    // t = 7/2: 13/12 + (7/2)/4
    CHECK(luroth_er_trunc(Rational(7, 2)) == Rational(47, 24));
    CHECK(luroth_er_trunc(Rational(1, 2)) == Rational(1, 2));  // min(R, t) = t here
    CHECK_THROWS_AS(luroth_er_trunc(Rational(-1)), std::domain_error);
    CHECK_THROWS_AS(luroth_er_trunc(Rational(100000000)), std::domain_error);
}

TEST_CASE("iid lattice forms, uniform family worked example") {
    // P(R = k) = 1/(k(k+1)): E(R ; R <= 3) = 13/12, E min(R,3) = 11/6,
    // E min(R,3)^2 = 25/6
    CHECK(iid_r_trunc_mean(kUniform, 3.0) == doctest::Approx(13.0 / 12.0).epsilon(1e-14));
    CHECK(iid_r_min_mean(kUniform, 3.0) == doctest::Approx(11.0 / 6.0).epsilon(1e-14));
    CHECK(iid_r_min_sq_mean(kUniform, 3.0) == doctest::Approx(25.0 / 6.0).epsilon(1e-14));
    CHECK(iid_r_tail(kUniform, 2.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(iid_r_tail(kUniform, 0.3) == 1.0);
}

TEST_CASE("iid lattice forms agree with the exact rational oracle") {
    for (double t : {1.0, 2.5, 3.0, 10.25, 1000.5}) {
        CAPTURE(t);
        const double exact = to_double(luroth_er_trunc(rational_from_double(t)));
        CHECK(iid_r_min_mean(kUniform, t) == doctest::Approx(exact).epsilon(1e-12));
    }
}

TEST_CASE("iid truncated means at scale") {
    // E min(R, m) for uniform is H_m at integer m; log m + gamma asymptotics
    const double gamma = 0.5772156649015329;
    CHECK(iid_r_min_mean(kUniform, 1e8) ==
          doctest::Approx(std::log(1e8) + gamma).epsilon(1e-9));
    // E min(R,m)^2 = 2m - H_m for uniform at integer m (2*3 - 11/6 = 25/6 above)
    const double v = iid_r_min_sq_mean(kUniform, 1e6);
    CHECK(v == doctest::Approx(2e6 - std::log(1e6) - gamma).epsilon(1e-9));
}

TEST_CASE("lattice tail is dominated by the continuous tail") {
    for (double x : {1.0, 1.5, 2.0, 7.3, 100.0})
        for (const auto* f : {&kUniform, &kPower2, &kPerturbed})
            CHECK(iid_r_tail(*f, x) <= y_tail(*f, x));
}

TEST_CASE("tail integral identity") {
    for (const auto* f : {&kUniform, &kPower2, &kPerturbed}) {
        const TailIdentityReport rep = tail_integral_identity(*f, 50.0);
        CHECK(rep.gap < 1e-8);
        CHECK(rep.closed == doctest::Approx(rep.integral).epsilon(1e-8));
    }
    // uniform closed form: E min(Y,t) = log t + 1
    const TailIdentityReport u = tail_integral_identity(kUniform, 20.0);
    CHECK(u.closed == doctest::Approx(std::log(20.0) + 1.0).epsilon(1e-12));
}
