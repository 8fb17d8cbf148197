#pragma once

// Thin helpers around GMP's C++ classes. mpq_class already gives us exact,
// always-canonical rational arithmetic; this header just adds the few
// operations the lab needs (parsing, decimal/dyadic construction, floor/ceil
// to machine integers, stable printing).

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace opplab {

using BigInt = mpz_class;
using Rational = mpq_class;

// Parse "p/q" or "p" (optionally signed). Throws std::invalid_argument on
// malformed input or q == 0. Whitespace is not tolerated: config files are
// machine-written and sloppy inputs should fail loudly.
Rational parse_rational(const std::string& text);

// Exact value of an IEEE double (doubles are dyadic rationals). Throws on
// NaN/Inf.
Rational rational_from_double(double v);

// mantissa / 2^bits, the canonical dyadic uniform draw.
Rational dyadic(const BigInt& mantissa, unsigned bits);

std::string to_string(const Rational& v);   // "p/q", or "p" when q == 1
std::string to_string(const BigInt& v);

// Exact floor/ceil as BigInt.
BigInt floor_big(const Rational& v);
BigInt ceil_big(const Rational& v);

// floor() fitting in int64, or nullopt if out of range.
std::optional<std::int64_t> floor_i64(const Rational& v);

inline double to_double(const Rational& v) { return v.get_d(); }

// Natural log of a positive BigInt, accurate even when the value itself is
// far beyond double range.
double log_big(const BigInt& v);

// k-th power with integer exponent >= 0.
Rational pow_rational(const Rational& base, unsigned exp);

}  // namespace opplab
