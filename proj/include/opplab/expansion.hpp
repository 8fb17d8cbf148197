#pragma once

// Exact classical expansions (luroth / engel / sylvester) over rationals.
//
// Shared digit convention: x in [1/d, 1/(d-1)) gives digit d = ceil(1/x), so
// an exact reciprocal 1/m yields digit m and a terminating expansion (the
// remainder maps send it to 0). Remainder maps:
//   luroth:    x' = d(d-1) x - (d-1)
//   engel:     x' = d x - 1
//   sylvester: x' = x - 1/d
// Series reconstruction inverts them term by term. The framework bridge is
// B = d - 1 >= 1 (these chains match the sampler presets of the same name).

#include "opplab/rational.hpp"

#include <cstddef>
#include <vector>

namespace opplab {

enum class Scheme { luroth, engel, sylvester };

const char* scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);  // throws invalid_argument

struct ExpandOptions {
    std::size_t max_digits = 64;
    // Sylvester digits at least square every step; stop (flagged, not an
    // error) once a digit outgrows this many bits.
    std::size_t digit_bit_cap = 4096;
};

struct DigitSequence {
    Scheme scheme = Scheme::luroth;
    std::vector<BigInt> digits;
    bool terminated = false;      // remainder hit 0 exactly
    bool hit_digit_cap = false;   // stopped by digit_bit_cap
};

// Expand x in (0,1). Throws std::domain_error outside that range.
DigitSequence expand(const Rational& x, Scheme scheme, const ExpandOptions& opt = {});

// Partial series sum of the first k digits (k <= digits.size()).
Rational reconstruct(const DigitSequence& seq, std::size_t k);
inline Rational reconstruct(const DigitSequence& seq) {
    return reconstruct(seq, seq.digits.size());
}

// x - reconstruct(seq, k), always >= 0; < 2^-k for luroth.
Rational defect(const Rational& x, const DigitSequence& seq, std::size_t k);

// B_n = d_n - 1 (>= 1 since every digit is >= 2).
std::vector<BigInt> to_framework_digits(const DigitSequence& seq);

// Scheme-specific digit constraints (luroth: d >= 2; engel: nondecreasing;
// sylvester: d_{n+1} >= d_n(d_n - 1) + 1). Returns a human-readable violation
// list, empty when the sequence is admissible.
std::vector<std::string> constraint_violations(const DigitSequence& seq);

}  // namespace opplab
