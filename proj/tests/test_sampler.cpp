#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "opplab/expansion.hpp"
#include "opplab/sampler.hpp"

#include <cmath>
#include <stdexcept>

using namespace opplab;

TEST_CASE("exact digit draw, worked examples") {
    DistributionFamily u = DistributionFamily::uniform();
    // phi=1, q=0, u=0.3: largest k with 0.3 <= 1/k
    CHECK(sample_digit_exact(Rational(1), Rational(0), Rational(3, 10), u) == 3);
    // phi=3, q=0, u=0.5: largest k with 1/2 <= 3/k
    CHECK(sample_digit_exact(Rational(3), Rational(0), Rational(1, 2), u) == 6);
    // phi=2, q=1, u=1: delta(2) = 4/4 = 1 covers the whole cell
    CHECK(sample_digit_exact(Rational(2), Rational(1), Rational(1), u) == 2);
    // power family: u = 1/4 against F(delta) = (1/k)^2
    CHECK(sample_digit_exact(Rational(1), Rational(0), Rational(1, 4),
                             DistributionFamily::power(2.0)) == 2);
}

TEST_CASE("boundary cell absorbs the deficit for fractional phi") {
    DistributionFamily u = DistributionFamily::uniform();
    // phi = 5/2: k_min = 3, F(delta(3)) = 5/6; a draw above that clamps
    CHECK(sample_digit_exact(Rational(5, 2), Rational(0), Rational(9, 10), u) == 3);
    CHECK(sample_digit_exact(Rational(5, 2), Rational(0), Rational(5, 6), u) == 3);
    // below the boundary the usual inversion applies: F(delta(4)) = 5/8
    CHECK(sample_digit_exact(Rational(5, 2), Rational(0), Rational(3, 5), u) == 4);
}

TEST_CASE("digit draw domain") {
    DistributionFamily u = DistributionFamily::uniform();
    CHECK_THROWS_AS(sample_digit_exact(Rational(1), Rational(0), Rational(0), u),
                    std::domain_error);
    CHECK_THROWS_AS(sample_digit_exact(Rational(1), Rational(0), Rational(3, 2), u),
                    std::domain_error);
    CHECK_THROWS_AS(sample_digit_exact(Rational(0), Rational(0), Rational(1, 2), u),
                    std::domain_error);
    CHECK_THROWS_AS(sample_digit_fast(1.0, 0.0, 0.0, u), std::domain_error);
}

TEST_CASE("exact draw handles astronomical phi") {
    DistributionFamily u = DistributionFamily::uniform();
    BigInt h = BigInt(1) << 200;
    Rational phi(h * (h + 1));  // sylvester-sized
    const BigInt k = sample_digit_exact(phi, Rational(0), Rational(1, 3), u);
    // k is the largest integer with 1/3 <= phi/k, i.e. floor(3 phi)
    CHECK(k == floor_big(Rational(3) * phi));
}

TEST_CASE("exact draw lands on its cell boundary") {
    // Defining property: k is the largest index with u <= F(delta(k)), or the
    // boundary cell k_min when no index qualifies.
    RandomStream rng(909090, StreamSpace::aux, 9);
    const DistributionFamily fams[] = {
        DistributionFamily::uniform(),
        DistributionFamily::power(2.0),
        DistributionFamily::power(3.0),
        DistributionFamily::perturbed_power(2.0, 1.0, 0.5),
    };
    const Rational phis[] = {Rational(1), Rational(7, 2), Rational((BigInt(1) << 170) + 5),
                             Rational(BigInt(3) << 300, 7)};
    const Rational qs[] = {Rational(0), Rational(1, 3), Rational(2)};
    for (const auto& f : fams)
        for (const auto& phi : phis)
            for (const auto& q : qs) {
                BigInt k_min = ceil_big(phi);
                if (k_min < 1) k_min = 1;
                for (int i = 0; i < 40; ++i) {
                    const Rational u = rng.next_dyadic(64);
                    const BigInt k = sample_digit_exact(phi, q, u, f);
                    CAPTURE(to_double(u));
                    if (u <= f.cdf_rational(delta(phi, k_min, q))) {
                        CHECK(u <= f.cdf_rational(delta(phi, k, q)));
                        CHECK(!(u <= f.cdf_rational(delta(phi, k + 1, q))));
                    } else {
                        CHECK(k == k_min);
                    }
                }
            }
}

TEST_CASE("fast and exact digit draws agree") {
    // Doubles are exact dyadics, so feeding the same u to both paths must
    // give the same digit away from the ~2^-50 cell-boundary set.
    RandomStream rng(515151, StreamSpace::aux, 5);
    struct Case {
        Rational phi;
        Rational q;
        DistributionFamily f;
    };
    const Case cases[] = {
        {Rational(1), Rational(0), DistributionFamily::uniform()},
        {Rational(7), Rational(0), DistributionFamily::uniform()},
        {Rational(42), Rational(0), DistributionFamily::power(2.0)},
        {Rational(5, 2), Rational(1, 3), DistributionFamily::uniform()},
        {Rational(12), Rational(1, 12), DistributionFamily::perturbed_power(1.0, 2.0, 1.0)},
    };
    for (const auto& c : cases) {
        for (int i = 0; i < 2000; ++i) {
            const double u = rng.next_u01();
            const double kd =
                sample_digit_fast(to_double(c.phi), to_double(c.q), u, c.f);
            const BigInt ke = sample_digit_exact(c.phi, c.q, rational_from_double(u), c.f);
            CAPTURE(u);
            CHECK(BigInt(kd) == ke);
        }
    }
}

TEST_CASE("luroth chain: iid ratios equal the digits") {
    ModelSpec m = ModelSpec::luroth();
    ChainSampler cs(m, RandomStream(99, StreamSpace::main, 0));
    for (int i = 0; i < 200; ++i) {
        const double r = cs.next_ratio();
        CHECK(r >= 1.0);
        CHECK(r == std::floor(r));  // with phi=1, q=0: R_n = B_{n+1}
        CHECK(BigInt(r) == cs.digit());
    }
}

TEST_CASE("engel chain digits are nondecreasing") {
    ModelSpec m = ModelSpec::engel();
    for (SampleMode mode : {SampleMode::fast, SampleMode::exact}) {
        ChainSampler cs(m, RandomStream(7, StreamSpace::main, 1), {.mode = mode});
        cs.start();
        BigInt prev = cs.digit();
        for (int i = 0; i < 60; ++i) {
            cs.next_ratio();
            CHECK(cs.digit() >= prev);
            prev = cs.digit();
        }
    }
}

TEST_CASE("sylvester chain growth") {
    ModelSpec m = ModelSpec::sylvester();
    ChainSampler cs(m, RandomStream(13, StreamSpace::main, 2));
    cs.start();
    BigInt prev = cs.digit();
    int exact_steps = 0;
    for (int i = 0; i < 12; ++i) {
        cs.next_ratio();
        if (!cs.digit_is_exact()) break;  // squared past the bigint phase
        CHECK(cs.digit() >= prev * (prev + 1));
        prev = cs.digit();
        ++exact_steps;
    }
    CHECK(exact_steps >= 5);
}

TEST_CASE("chains are deterministic in the seed and stream") {
    ModelSpec m = ModelSpec::engel();
    ChainSampler a(m, RandomStream(1234, StreamSpace::main, 4));
    ChainSampler b(m, RandomStream(1234, StreamSpace::main, 4));
    ChainSampler c(m, RandomStream(1234, StreamSpace::main, 5));
    bool same = true, cross_same = true;
    for (int i = 0; i < 100; ++i) {
        const double ra = a.next_ratio(), rb = b.next_ratio(), rc = c.next_ratio();
        same = same && (ra == rb);
        cross_same = cross_same && (ra == rc);
    }
    CHECK(same);
    CHECK_FALSE(cross_same);
}

TEST_CASE("exact trajectories are consistent with the conditional law") {
    ModelSpec m = ModelSpec::engel();
    m.q.kind = QKind::inv_last_digit;  // exercise history-dependent q
    Trajectory t = sample_trajectory(m, 20, RandomStream(77, StreamSpace::main, 6),
                                     {.mode = SampleMode::exact});
    REQUIRE(t.b.size() == 20);
    REQUIRE(t.r_exact.size() == 19);
    CHECK(t.digits_exact_complete);
    for (std::size_t j = 0; j + 1 < t.b.size(); ++j) {
        const Rational phi = m.phi(t.b[j]);
        const Rational q = m.q(t.b[j], j + 1);
        CHECK(t.b[j + 1] >= ceil_big(phi));
        CHECK(t.r_exact[j] == r_from_digits(phi, t.b[j + 1], q));
        CHECK(to_double(t.r_exact[j]) == t.r[j]);
    }
    // log_b tracks the exact digits
    for (std::size_t j = 0; j < t.b.size(); ++j)
        CHECK(t.log_b[j] == doctest::Approx(log_big(t.b[j])).epsilon(1e-12));
}

TEST_CASE("fast sylvester chains switch to log tracking") {
    ModelSpec m = ModelSpec::sylvester();
    ChainSampler cs(m, RandomStream(5, StreamSpace::main, 7));
    double prev_log = 0.0;
    bool saw_exact = false, saw_log = false;
    for (int i = 0; i < 40; ++i) {
        const double r = cs.next_ratio();
        CHECK(r >= 1.0);
        CHECK(cs.log_digit() > prev_log);
        prev_log = cs.log_digit();
        if (cs.digit_is_exact())
            saw_exact = true;
        else
            saw_log = true;
    }
    CHECK(saw_exact);
    CHECK(saw_log);  // ~512 bits is reached after ~10 squarings
    CHECK_THROWS_AS(cs.digit(), std::logic_error);
}

TEST_CASE("fast engel chains keep running beyond exact range") {
    ModelSpec m = ModelSpec::engel();
    ChainSampler cs(m, RandomStream(6, StreamSpace::main, 8));
    for (int i = 0; i < 2000; ++i) {
        const double r = cs.next_ratio();
        CHECK(r >= 1.0);
    }
    CHECK(std::isfinite(cs.log_digit()));
    CHECK_FALSE(cs.digit_is_exact());
}

TEST_CASE("exact mode respects the trajectory bit cap") {
    ModelSpec m = ModelSpec::sylvester();
    SamplerOptions opt{.mode = SampleMode::exact, .trajectory_bit_cap = 64};
    bool threw = false;
    try {
        sample_trajectory(m, 30, RandomStream(21, StreamSpace::main, 9), opt);
    } catch (const CappedTrajectoryError& e) {
        threw = true;
        const Trajectory& p = e.prefix();
        CHECK_FALSE(p.digits_exact_complete);
        CHECK(p.b.size() >= 2);
        CHECK(p.b.size() < 30);
        CHECK(p.r.size() == p.b.size() - 1);
    }
    CHECK(threw);
}

TEST_CASE("trajectory shapes") {
    ModelSpec m = ModelSpec::luroth();
    Trajectory t0 = sample_trajectory(m, 0, RandomStream(3, StreamSpace::main, 10));
    CHECK(t0.b.empty());
    CHECK(t0.digits_exact_complete);
    Trajectory t1 = sample_trajectory(m, 1, RandomStream(3, StreamSpace::main, 10));
    CHECK(t1.b.size() == 1);
    CHECK(t1.r.empty());
    Trajectory t5 = sample_trajectory(m, 5, RandomStream(3, StreamSpace::main, 10));
    CHECK(t5.b.size() == 5);
    CHECK(t5.r.size() == 4);
    CHECK(t5.r_exact.empty());  // fast mode
}

TEST_CASE("exact mode rejects bad options") {
    ModelSpec m = ModelSpec::luroth();
    CHECK_THROWS_AS(
        ChainSampler(m, RandomStream(1, StreamSpace::main, 0),
                     SamplerOptions{.mode = SampleMode::exact, .v_bits = 0}),
        std::invalid_argument);
    ChainSampler fast(m, RandomStream(1, StreamSpace::main, 0));
    CHECK_THROWS_AS(fast.next_ratio_exact(), std::logic_error);
}

TEST_CASE("x-side sampler feeds the classical expansions") {
    RandomStream rng(31, StreamSpace::aux, 20);
    for (int i = 0; i < 20; ++i) {
        DigitSequence seq = sample_x_expansion(Scheme::engel, rng, 64, {.max_digits = 30});
        CHECK_FALSE(seq.digits.empty());
        CHECK(constraint_violations(seq).empty());
    }
}
