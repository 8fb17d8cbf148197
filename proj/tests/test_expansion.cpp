#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "opplab/expansion.hpp"
#include "opplab/rng.hpp"

#include <stdexcept>

using namespace opplab;

// Worked example, x = 2/5: the three schemes give
//   luroth     3, 3, 3, ...   (remainder map fixes 2/5)
//   engel      3, 5           (2/5 = 1/3 + 1/(3*5))
//   sylvester  3, 15          (2/5 = 1/3 + 1/15)
TEST_CASE("expansions of 2/5") {
    const Rational x(2, 5);

    DigitSequence lu = expand(x, Scheme::luroth, {.max_digits = 5});
    REQUIRE(lu.digits.size() == 5);
    for (const auto& d : lu.digits) CHECK(d == 3);
    CHECK_FALSE(lu.terminated);

    DigitSequence en = expand(x, Scheme::engel);
    REQUIRE(en.digits.size() == 2);
    CHECK(en.digits[0] == 3);
    CHECK(en.digits[1] == 5);
    CHECK(en.terminated);
    CHECK(reconstruct(en) == x);

    DigitSequence sy = expand(x, Scheme::sylvester);
    REQUIRE(sy.digits.size() == 2);
    CHECK(sy.digits[0] == 3);
    CHECK(sy.digits[1] == 15);
    CHECK(sy.terminated);
    CHECK(reconstruct(sy) == x);
}

TEST_CASE("luroth partial sums") {
    DigitSequence seq;
    seq.scheme = Scheme::luroth;
    seq.digits = {BigInt(3), BigInt(3)};
    // 1/3 + (1/6)(1/3) = 7/18
    CHECK(reconstruct(seq, 2) == Rational(7, 18));
    CHECK(reconstruct(seq, 1) == Rational(1, 3));
    CHECK(reconstruct(seq, 0) == Rational(0));
    CHECK_THROWS_AS(reconstruct(seq, 3), std::out_of_range);
}

TEST_CASE("exact reciprocals terminate in one digit") {
    for (int m = 2; m <= 40; ++m) {
        const Rational x(1, m);
        for (Scheme s : {Scheme::luroth, Scheme::engel, Scheme::sylvester}) {
            DigitSequence seq = expand(x, s);
            REQUIRE(seq.digits.size() == 1);
            CHECK(seq.digits[0] == m);
            CHECK(seq.terminated);
        }
    }
}

TEST_CASE("expand validates the domain") {
    CHECK_THROWS_AS(expand(Rational(0), Scheme::luroth), std::domain_error);
    CHECK_THROWS_AS(expand(Rational(1), Scheme::luroth), std::domain_error);
    CHECK_THROWS_AS(expand(Rational(3, 2), Scheme::engel), std::domain_error);
    CHECK_THROWS_AS(expand(Rational(-1, 2), Scheme::sylvester), std::domain_error);
}

TEST_CASE("luroth defect halves per digit") {
    const Rational x(355, 452);
    DigitSequence seq = expand(x, Scheme::luroth, {.max_digits = 20});
    Rational bound(1);
    for (std::size_t k = 1; k <= seq.digits.size(); ++k) {
        bound /= 2;
        const Rational d = defect(x, seq, k);
        CHECK(d >= 0);
        CHECK(d < bound);
    }
}

TEST_CASE("random rationals roundtrip") {
    RandomStream rng(2718, StreamSpace::aux, 12);
    for (int trial = 0; trial < 40; ++trial) {
        // random p/q in (0,1)
        const std::uint64_t q = 2 + (rng.next_u64() % 9999);
        const std::uint64_t p = 1 + (rng.next_u64() % (q - 1));
        Rational x(BigInt(static_cast<unsigned long>(p)),
                   BigInt(static_cast<unsigned long>(q)));
        x.canonicalize();  // mpq_class(p, q) keeps p/q as given

        for (Scheme s : {Scheme::luroth, Scheme::engel, Scheme::sylvester}) {
            CAPTURE(p);
            CAPTURE(q);
            CAPTURE(scheme_name(s));
            DigitSequence seq = expand(x, s, {.max_digits = 80});
            CHECK(constraint_violations(seq).empty());
            const Rational d = defect(x, seq, seq.digits.size());
            CHECK(d >= 0);
            if (seq.terminated) {
                CHECK(d == 0);
                CHECK(reconstruct(seq) == x);
            } else if (s == Scheme::luroth && !seq.hit_digit_cap) {
                // partial sums converge at least geometrically
                CHECK(d < Rational(1, BigInt(1) << 80));
            }
        }
    }
}

TEST_CASE("engel and sylvester digit growth") {
    const Rational x(17, 97);
    DigitSequence en = expand(x, Scheme::engel);
    for (std::size_t i = 1; i < en.digits.size(); ++i) CHECK(en.digits[i] >= en.digits[i - 1]);
    DigitSequence sy = expand(x, Scheme::sylvester);
    for (std::size_t i = 1; i < sy.digits.size(); ++i)
        CHECK(sy.digits[i] >= sy.digits[i - 1] * (sy.digits[i - 1] - 1) + 1);
}

TEST_CASE("sylvester digit cap") {
    // 5/121 is the classic greedy blowup: 25, 757, 763309, 873960180913,
    // then a 81-bit digit. A 64-bit cap must stop after the fourth.
    DigitSequence seq = expand(Rational(5, 121), Scheme::sylvester,
                               {.max_digits = 1000, .digit_bit_cap = 64});
    CHECK(seq.hit_digit_cap);
    CHECK_FALSE(seq.terminated);
    REQUIRE(seq.digits.size() == 4);
    CHECK(seq.digits[0] == 25);
    CHECK(seq.digits[3] == BigInt("873960180913"));
}

TEST_CASE("framework bridge shifts digits down by one") {
    DigitSequence seq = expand(Rational(2, 5), Scheme::engel);
    const auto b = to_framework_digits(seq);
    REQUIRE(b.size() == 2);
    CHECK(b[0] == 2);
    CHECK(b[1] == 4);
}

TEST_CASE("constraint violations are detected") {
    DigitSequence bad;
    bad.scheme = Scheme::engel;
    bad.digits = {BigInt(5), BigInt(3)};
    CHECK(constraint_violations(bad).size() == 1);
    bad.scheme = Scheme::sylvester;
    bad.digits = {BigInt(3), BigInt(6)};  // needs >= 3*2+1 = 7
    CHECK(constraint_violations(bad).size() == 1);
    bad.scheme = Scheme::luroth;
    bad.digits = {BigInt(1)};
    CHECK(constraint_violations(bad).size() == 1);
}

TEST_CASE("scheme names roundtrip") {
    for (Scheme s : {Scheme::luroth, Scheme::engel, Scheme::sylvester})
        CHECK(scheme_from_name(scheme_name(s)) == s);
    CHECK_THROWS_AS(scheme_from_name("cantor"), std::invalid_argument);
}
