#include "opplab/rational.hpp"

#include <cmath>

namespace opplab {

Rational parse_rational(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("rational: empty string");
    // GMP's string constructor skips whitespace; we want "1 /2" to fail.
    if (text.find_first_not_of("0123456789+-/") != std::string::npos)
        throw std::invalid_argument("rational: cannot parse '" + text + "'");
    const auto slash = text.find('/');
    try {
        if (slash == std::string::npos) {
            BigInt p(text, 10);
            return Rational(p);
        }
        const std::string num = text.substr(0, slash);
        const std::string den = text.substr(slash + 1);
        if (num.empty() || den.empty())
            throw std::invalid_argument("rational: missing numerator or denominator in '" + text + "'");
        BigInt p(num, 10);
        BigInt q(den, 10);
        if (q == 0) throw std::invalid_argument("rational: zero denominator in '" + text + "'");
        Rational r(p, q);
        r.canonicalize();
        return r;
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        // mpz_class(string) throws std::invalid_argument on bad digits already,
        // but be defensive about other gmpxx failure modes.
        throw std::invalid_argument("rational: cannot parse '" + text + "'");
    }
}

Rational rational_from_double(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("rational: double is not finite");
    Rational r;
    mpq_set_d(r.get_mpq_t(), v);  // exact: doubles are dyadic
    return r;
}

Rational dyadic(const BigInt& mantissa, unsigned bits) {
    BigInt den = 1;
    den <<= bits;
    Rational r(mantissa, den);
    r.canonicalize();
    return r;
}

std::string to_string(const Rational& v) {
    if (v.get_den() == 1) return v.get_num().get_str();
    return v.get_num().get_str() + "/" + v.get_den().get_str();
}

std::string to_string(const BigInt& v) { return v.get_str(); }

BigInt floor_big(const Rational& v) {
    BigInt q;
    mpz_fdiv_q(q.get_mpz_t(), v.get_num().get_mpz_t(), v.get_den().get_mpz_t());
    return q;
}

BigInt ceil_big(const Rational& v) {
    BigInt q;
    mpz_cdiv_q(q.get_mpz_t(), v.get_num().get_mpz_t(), v.get_den().get_mpz_t());
    return q;
}

std::optional<std::int64_t> floor_i64(const Rational& v) {
    BigInt f = floor_big(v);
    if (!f.fits_slong_p()) return std::nullopt;
    return static_cast<std::int64_t>(f.get_si());
}

double log_big(const BigInt& v) {
    if (v <= 0) throw std::domain_error("log_big: value must be positive");
    signed long int exp2 = 0;
    const double mant = mpz_get_d_2exp(&exp2, v.get_mpz_t());  // mant in [0.5, 1)
    return std::log(mant) + static_cast<double>(exp2) * 0.6931471805599453;
}

Rational pow_rational(const Rational& base, unsigned exp) {
    // gmpxx get_num()/get_den() return copies; use the raw refs to write.
    Rational r;
    mpz_pow_ui(mpq_numref(r.get_mpq_t()), mpq_numref(base.get_mpq_t()), exp);
    mpz_pow_ui(mpq_denref(r.get_mpq_t()), mpq_denref(base.get_mpq_t()), exp);
    // num^k / den^k of a canonical fraction is canonical.
    return r;
}

}  // namespace opplab
