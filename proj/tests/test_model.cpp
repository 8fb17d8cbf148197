#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "opplab/model.hpp"

#include <cmath>
#include <stdexcept>

using namespace opplab;

TEST_CASE("delta worked examples") {
    // phi=3, k=6, q=0: 3/6
    CHECK(delta(Rational(3), BigInt(6), Rational(0)) == Rational(1, 2));
    // phi=2, k=4, q=1: 2*2/(4+2)
    CHECK(delta(Rational(2), BigInt(4), Rational(1)) == Rational(2, 3));
    CHECK(r_from_digits(Rational(2), BigInt(4), Rational(1)) == Rational(3, 2));
    // r is exactly 1/delta
    CHECK(r_from_digits(Rational(2), BigInt(4), Rational(1)) *
              delta(Rational(2), BigInt(4), Rational(1)) ==
          Rational(1));
    CHECK(delta_d(3.0, 6.0, 0.0) == 0.5);
    CHECK(r_from_digits_d(2.0, 4.0, 1.0) == 1.5);
}

TEST_CASE("delta domain") {
    CHECK_THROWS_AS(delta(Rational(3), BigInt(2), Rational(0)), std::domain_error);
    CHECK_THROWS_AS(delta(Rational(0), BigInt(1), Rational(0)), std::domain_error);
    CHECK_THROWS_AS(delta(Rational(1), BigInt(1), Rational(-1)), std::domain_error);
    // k = ceil(phi) is admissible for fractional phi
    CHECK(delta(Rational(5, 2), BigInt(3), Rational(0)) == Rational(5, 6));
}

TEST_CASE("phi presets") {
    PhiSpec one;  // default
    CHECK(one(BigInt(17)) == Rational(1));
    PhiSpec ident{.kind = PhiKind::identity};
    CHECK(ident(BigInt(7)) == Rational(7));
    PhiSpec succ{.kind = PhiKind::successor};
    CHECK(succ(BigInt(7)) == Rational(56));
    PhiSpec con{.kind = PhiKind::constant, .constant_value = Rational(5, 2)};
    CHECK(con(BigInt(3)) == Rational(5, 2));
    CHECK_THROWS_AS(ident(BigInt(0)), std::domain_error);
}

TEST_CASE("phi table") {
    PhiSpec t{.kind = PhiKind::table,
              .table = {Rational(5, 2), Rational(7, 3)},
              .table_hold_last = true};
    CHECK(t(BigInt(1)) == Rational(5, 2));
    CHECK(t(BigInt(2)) == Rational(7, 3));
    CHECK(t(BigInt(9)) == Rational(7, 3));  // held
    t.table_hold_last = false;
    CHECK_THROWS_AS(t(BigInt(9)), std::domain_error);
}

TEST_CASE("log phi from log h") {
    PhiSpec succ{.kind = PhiKind::successor};
    // small digit: exact comparison against log(h(h+1))
    CHECK(succ.log_phi_from_log_h(std::log(2.0)) ==
          doctest::Approx(std::log(6.0)).epsilon(1e-14));
    // huge digit: correction must vanish, not overflow
    CHECK(succ.log_phi_from_log_h(800.0) == doctest::Approx(1600.0).epsilon(1e-14));
    PhiSpec ident{.kind = PhiKind::identity};
    CHECK(ident.log_phi_from_log_h(123.0) == 123.0);
    PhiSpec one;
    CHECK(one.log_phi_from_log_h(50.0) == 0.0);
}

TEST_CASE("q specs") {
    QSpec qc;  // constant 0
    CHECK(qc(BigInt(9), 3) == Rational(0));
    QSpec qi{.kind = QKind::inv_last_digit};
    CHECK(qi(BigInt(4), 1) == Rational(1, 4));
    CHECK(qi.value_d(std::log(4.0), 1) == doctest::Approx(0.25).epsilon(1e-14));
    // huge digit: q -> 0
    CHECK(qi.value_d(1e6, 1) == 0.0);
    CHECK_THROWS_AS(qi(BigInt(0), 1), std::domain_error);
}

TEST_CASE("model presets") {
    ModelSpec lu = ModelSpec::luroth();
    CHECK(lu.iid_ratios());
    CHECK(lu.stationary());
    CHECK(lu.alpha_meta == 1.0);
    CHECK(lu.l_meta.value() == 1.0);

    ModelSpec en = ModelSpec::engel();
    CHECK_FALSE(en.iid_ratios());
    CHECK(en.phi.kind == PhiKind::identity);

    ModelSpec sy = ModelSpec::sylvester(DistributionFamily::power(2.0));
    CHECK(sy.alpha_meta == 2.0);
    CHECK(sy.phi.kind == PhiKind::successor);
}

TEST_CASE("family_at holds the last family") {
    ModelSpec m = ModelSpec::luroth();
    m.families.push_back(DistributionFamily::power(2.0));
    CHECK(m.family_at(0).alpha() == 1.0);
    CHECK(m.family_at(1).alpha() == 2.0);
    CHECK(m.family_at(100).alpha() == 2.0);
    CHECK_FALSE(m.stationary());
    CHECK_FALSE(m.iid_ratios());
}

// --- condition checkers -------------------------------------------------------

TEST_CASE("ratio grid constructor") {
    const auto g = make_ratio_grid();
    CHECK(g.front() == 1.0);
    CHECK(g.back() == 1e-7);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] < g[i - 1]);
    CHECK_THROWS_AS(make_ratio_grid(1e-8, 1e-7, 32), std::invalid_argument);
}

TEST_CASE("grid validation rejects bad grids") {
    const auto good = make_ratio_grid();
    DistributionFamily f = DistributionFamily::uniform();

    std::vector<double> increasing(good.rbegin(), good.rend());
    CHECK_THROWS_AS(check_cond2f(f, 1.0, increasing), std::invalid_argument);

    const auto shallow = make_ratio_grid(1.0, 1e-5, 32);  // never reaches 1e-6
    CHECK_THROWS_AS(check_cond2f(f, 1.0, shallow), std::invalid_argument);

    const auto sparse = make_ratio_grid(1.0, 1e-7, 8);  // too few per decade
    CHECK_THROWS_AS(check_cond2f(f, 1.0, sparse), std::invalid_argument);
}

TEST_CASE("cond2f on the uniform family") {
    const auto g = make_ratio_grid();
    const TailRatioReport r = check_cond2f(DistributionFamily::uniform(), 1.0, g);
    CHECK(r.pass);
    CHECK_FALSE(r.degenerate);
    CHECK(r.l_hat == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.last_decade_spread < 1e-12);
}

TEST_CASE("cond2f degenerate decay") {
    // F(x) = x^2 against alpha = 1: ratio x -> 0, slope 1
    const auto g = make_ratio_grid();
    const TailRatioReport r = check_cond2f(DistributionFamily::power(2.0), 1.0, g);
    CHECK(r.pass);
    CHECK(r.degenerate);
    CHECK(r.l_hat == 0.0);
    CHECK(r.slope == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("uniform power limit estimates L") {
    // F(x) = x (3 + x)/4: F(x)/x -> 3/4
    DistributionFamily f = DistributionFamily::perturbed_power(1.0, 3.0, 1.0);
    const auto g = make_ratio_grid();
    const TailRatioReport r = check_uniform_power_limit(f, 1.0, g);
    CHECK(r.pass);
    CHECK(r.l_hat == doctest::Approx(0.75).epsilon(1e-5));
    CHECK(r.l_hat == doctest::Approx(f.limit_ratio()).epsilon(1e-5));
}

TEST_CASE("both checkers report the same estimator") {
    const auto g = make_ratio_grid();
    for (auto f : {DistributionFamily::uniform(),
                   DistributionFamily::perturbed_power(1.0, 2.0, 1.0),
                   DistributionFamily::power(2.0)}) {
        const TailRatioReport a = check_cond2f(f, 1.0, g);
        const TailRatioReport b = check_uniform_power_limit(f, 1.0, g);
        CHECK(a.l_hat == b.l_hat);
        CHECK(a.pass == b.pass);
    }
}

TEST_CASE("lipschitz bounded families") {
    const LipschitzReport u = check_lipschitz(DistributionFamily::uniform());
    CHECK(u.bounded);
    CHECK(u.m_hat == doctest::Approx(1.0).epsilon(1e-9));

    const LipschitzReport p2 = check_lipschitz(DistributionFamily::power(2.0));
    CHECK(p2.bounded);
    CHECK(p2.m_hat == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("lipschitz unbounded slope at zero") {
    // F(x) = sqrt(x): quotients ~ 1/sqrt(x) blow up at the origin
    const LipschitzReport r = check_lipschitz(DistributionFamily::power(0.5));
    CHECK_FALSE(r.bounded);
    CHECK(r.fine_scale_growth > 100.0);
    CHECK_THROWS_AS(check_lipschitz(DistributionFamily::uniform(), 10),
                    std::invalid_argument);
}

TEST_CASE("model-level checkers aggregate families") {
    ModelSpec m = ModelSpec::luroth();
    m.families.push_back(DistributionFamily::power(2.0));  // nonstationary

    // cond2f: uniform passes with l_hat 1, power(2) degenerately with 0
    const auto g = make_ratio_grid();
    const TailRatioReport c = check_cond2f(m, g);
    CHECK(c.pass);
    CHECK(c.l_hat == doctest::Approx(1.0).epsilon(1e-12));

    // but there is no single shared L, so the uniform-limit variant fails
    const TailRatioReport ul = check_uniform_power_limit(m, g);
    CHECK_FALSE(ul.pass);

    const LipschitzReport lip = check_lipschitz(m);
    CHECK(lip.bounded);
    CHECK(lip.m_hat == doctest::Approx(2.0).epsilon(1e-3));
}
