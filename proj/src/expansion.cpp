#include "opplab/expansion.hpp"

#include <stdexcept>

namespace opplab {

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::luroth:
            return "luroth";
        case Scheme::engel:
            return "engel";
        case Scheme::sylvester:
            return "sylvester";
    }
    return "?";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "luroth") return Scheme::luroth;
    if (name == "engel") return Scheme::engel;
    if (name == "sylvester") return Scheme::sylvester;
    throw std::invalid_argument("unknown scheme '" + name + "' (luroth|engel|sylvester)");
}

DigitSequence expand(const Rational& x, Scheme scheme, const ExpandOptions& opt) {
    if (x <= 0 || x >= 1) throw std::domain_error("expand: x must lie in (0,1)");
    DigitSequence seq;
    seq.scheme = scheme;
    Rational rem = x;
    rem.canonicalize();  // tolerate Rational(p, q) built from non-coprime pairs
    while (seq.digits.size() < opt.max_digits) {
        // d = ceil(1/rem); for rem = 1/m exactly this is m.
        Rational inv = Rational(1) / rem;
        BigInt d = ceil_big(inv);
        if (mpz_sizeinbase(d.get_mpz_t(), 2) > opt.digit_bit_cap) {
            seq.hit_digit_cap = true;
            break;
        }
        seq.digits.push_back(d);
        switch (scheme) {
            case Scheme::luroth:
                rem = Rational(d * (d - 1)) * rem - Rational(d - 1);
                break;
            case Scheme::engel:
                rem = Rational(d) * rem - 1;
                break;
            case Scheme::sylvester:
                rem = rem - Rational(BigInt(1), d);
                break;
        }
        if (rem == 0) {
            seq.terminated = true;
            break;
        }
        // The cell convention guarantees 0 <= rem < 1 after each step.
        if (rem < 0 || rem >= 1)
            throw std::logic_error("expand: remainder left [0,1), digit map is broken");
    }
    return seq;
}

Rational reconstruct(const DigitSequence& seq, std::size_t k) {
    if (k > seq.digits.size())
        throw std::out_of_range("reconstruct: k exceeds digit count");
    Rational sum(0);
    Rational prefix(1);  // product of the per-term contraction factors
    for (std::size_t i = 0; i < k; ++i) {
        const BigInt& d = seq.digits[i];
        switch (seq.scheme) {
            case Scheme::luroth:
                sum += prefix / Rational(d);
                prefix /= Rational(d * (d - 1));
                break;
            case Scheme::engel:
                prefix /= Rational(d);
                sum += prefix;
                break;
            case Scheme::sylvester:
                sum += Rational(BigInt(1), d);
                break;
        }
    }
    // Rational(BigInt,BigInt) constructions above are canonical except the
    // 1/d terms, which mpq keeps canonical since gcd(1, d) = 1.
    return sum;
}

Rational defect(const Rational& x, const DigitSequence& seq, std::size_t k) {
    Rational d = x - reconstruct(seq, k);
    if (d < 0)
        throw std::logic_error("defect: partial sum overshot x (wrong digit sequence?)");
    return d;
}

std::vector<BigInt> to_framework_digits(const DigitSequence& seq) {
    std::vector<BigInt> b;
    b.reserve(seq.digits.size());
    for (const BigInt& d : seq.digits) {
        if (d < 2) throw std::domain_error("bridge: expansion digit below 2");
        b.push_back(d - 1);
    }
    return b;
}

std::vector<std::string> constraint_violations(const DigitSequence& seq) {
    std::vector<std::string> out;
    const auto& d = seq.digits;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] < 2) {
            out.push_back("digit " + std::to_string(i + 1) + " = " + to_string(d[i]) +
                          " < 2");
            continue;
        }
        if (i == 0) continue;
        switch (seq.scheme) {
            case Scheme::luroth:
                break;
            case Scheme::engel:
                if (d[i] < d[i - 1])
                    out.push_back("engel digits must be nondecreasing, got " +
                                  to_string(d[i - 1]) + " -> " + to_string(d[i]));
                break;
            case Scheme::sylvester: {
                BigInt lb = d[i - 1] * (d[i - 1] - 1) + 1;
                if (d[i] < lb)
                    out.push_back("sylvester digit " + to_string(d[i]) + " below " +
                                  to_string(lb));
                break;
            }
        }
    }
    return out;
}

}  // namespace opplab
