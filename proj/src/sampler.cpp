#include "opplab/sampler.hpp"

#include "opplab/expansion.hpp"

#include <cmath>

namespace opplab {

namespace {

// Thresholds for the fast-mode double phase: with phi below 2^40 and the
// candidate digit below 2^50, every intermediate stays exactly representable.
constexpr double kMaxFastPhi = 1099511627776.0;      // 2^40
constexpr double kMaxFastDigit = 1125899906842624.0; // 2^50

long double cdf_ld(const DistributionFamily& f, long double x) {
    if (x <= 0.0L) return 0.0L;
    if (x >= 1.0L) return 1.0L;
    const long double xa = powl(x, static_cast<long double>(f.alpha()));
    if (f.kind() != FamilyKind::perturbed_power) return xa;
    const long double c0 = f.c0(), c1 = f.c1();
    return xa * (c0 + c1 * x) / (c0 + c1);
}

// u <= F(delta(phi, k, q)): exact rational comparison when the family allows
// it, long-double boundary otherwise (documented fallback for non-integral
// alpha).
bool u_le_cdf_delta(const Rational& u, const Rational& phi, const BigInt& k,
                    const Rational& q, const DistributionFamily& f) {
    const Rational d = delta(phi, k, q);
    if (f.exact_capable()) return u <= f.cdf_rational(d);
    const long double du = static_cast<long double>(mpq_get_d(u.get_mpq_t()));
    const long double dd = static_cast<long double>(mpq_get_d(d.get_mpq_t()));
    return du <= cdf_ld(f, dd);
}

// Largest k with u <= delta(k)^a, solved in one integer a-th root. Clearing
// denominators in u (k + phi q)^a <= (phi (1+q))^a puts the boundary on the
// lattice m = k S2 + S1 (phi q = S1/S2) as den m^a <= num, so m is the floor
// root of num/den. A float candidate cannot do this job: its relative error
// turns into an absolute one of order phi * 1e-16, and bracketing that gap
// costs one exact comparison per bit of phi.
BigInt power_cell_root(const Rational& phi, const Rational& q, const Rational& u,
                       unsigned a) {
    const Rational t = phi * (1 + q);
    const Rational s = phi * q;
    BigInt t1a, t2a, s2a;
    mpz_pow_ui(t1a.get_mpz_t(), t.get_num().get_mpz_t(), a);
    mpz_pow_ui(t2a.get_mpz_t(), t.get_den().get_mpz_t(), a);
    mpz_pow_ui(s2a.get_mpz_t(), s.get_den().get_mpz_t(), a);
    const BigInt num = u.get_den() * t1a * s2a;
    const BigInt den = u.get_num() * t2a;
    BigInt quo, m;
    mpz_fdiv_q(quo.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    if (quo < 1) return BigInt(0);
    mpz_root(m.get_mpz_t(), quo.get_mpz_t(), a);
    BigInt k = m - s.get_num();
    mpz_fdiv_q(k.get_mpz_t(), k.get_mpz_t(), s.get_den().get_mpz_t());
    return k;
}

}  // namespace

BigInt sample_digit_exact(const Rational& phi, const Rational& q, const Rational& u,
                          const DistributionFamily& f) {
    if (u <= 0 || u > 1) throw std::domain_error("sample_digit: u must lie in (0,1]");
    if (phi <= 0) throw std::domain_error("sample_digit: phi must be positive");
    if (q < 0) throw std::domain_error("sample_digit: q must be nonnegative");

    BigInt k_min = ceil_big(phi);
    if (k_min < 1) k_min = 1;

    // Boundary cell: for non-integral phi, F(delta(k_min)) < 1 and draws above
    // it clamp to k_min (the cell absorbs the deficit).
    if (!u_le_cdf_delta(u, phi, k_min, q, f)) return k_min;

    // Uniform and pure power families invert algebraically. The boundary
    // comparisons double-check the root; on any disagreement the generic
    // bracket search below still decides.
    if (f.exact_capable() && f.kind() != FamilyKind::perturbed_power) {
        BigInt k = power_cell_root(phi, q, u, static_cast<unsigned>(f.alpha()));
        if (k < k_min) k = k_min;
        if (u_le_cdf_delta(u, phi, k, q, f) && !u_le_cdf_delta(u, phi, k + 1, q, f))
            return k;
    }

    // Float candidate k0 ~ phi ((1+q)/V - q); the multiply-by-dyadic keeps it
    // exact even when phi is astronomically large.
    const double qd = to_double(q);
    double ud = to_double(u);
    if (!(ud > 0.0)) ud = 5e-324;  // u can round to 0 for 128-bit draws
    const double vd = f.inv_cdf(ud > 1.0 ? 1.0 : ud);
    double cd = (1.0 + qd) / vd - qd;
    if (!(cd >= 1.0)) cd = 1.0;
    BigInt k0 = floor_big(phi * rational_from_double(cd));
    if (k0 < k_min) k0 = k_min;

    // Bracket [lo good, hi bad] around the largest k with u <= F(delta(k)),
    // then binary search. The candidate is usually off by at most 1, so this
    // is a couple of exact comparisons in practice.
    BigInt lo, hi;
    if (u_le_cdf_delta(u, phi, k0, q, f)) {
        lo = k0;
        BigInt step = 1;
        hi = k0 + step;
        while (u_le_cdf_delta(u, phi, hi, q, f)) {
            lo = hi;
            step <<= 1;
            hi = k0 + step;
        }
    } else {
        lo = k_min;
        hi = k0;
    }
    while (hi - lo > 1) {
        BigInt mid = (lo + hi) >> 1;
        if (u_le_cdf_delta(u, phi, mid, q, f))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

double sample_digit_fast(double phi, double q, double u, const DistributionFamily& f) {
    if (!(u > 0.0) || u > 1.0) throw std::domain_error("sample_digit: u must lie in (0,1]");
    const double v = f.inv_cdf(u);
    const double k_min = std::ceil(phi);
    double k = std::floor(phi * (1.0 + q) / v - phi * q);
    if (!(k >= k_min)) k = k_min;
    // Fix the cell inequalities against the double CDF; float rounding can
    // leave the candidate one off.
    for (int guard = 0; guard < 64 && k > k_min && u > f.cdf(delta_d(phi, k, q)); ++guard)
        k -= 1.0;
    for (int guard = 0; guard < 64 && u <= f.cdf(delta_d(phi, k + 1.0, q)); ++guard)
        k += 1.0;
    return k;
}

// --- ChainSampler ------------------------------------------------------------

ChainSampler::ChainSampler(const ModelSpec& model, RandomStream rng, SamplerOptions opt)
    : model_(&model), rng_(rng), opt_(opt) {
    if (model.families.empty())
        throw std::invalid_argument("sampler: model has no distribution family");
    if (opt_.mode == SampleMode::exact && (opt_.v_bits == 0 || opt_.v_bits > 128))
        throw std::invalid_argument("sampler: v_bits must be 1..128");
}

const BigInt& ChainSampler::digit() const {
    if (!digit_exact_)
        throw std::logic_error("sampler: digit no longer tracked exactly (log phase)");
    return b_;
}

void ChainSampler::start() {
    if (started_) return;
    const DistributionFamily& f0 = model_->family_at(0);
    if (opt_.mode == SampleMode::exact) {
        const Rational u = rng_.next_dyadic(opt_.v_bits);
        b_ = sample_digit_exact(model_->init_phi, model_->init_q, u, f0);
    } else {
        const double u = rng_.next_u01();
        const double phi_d = to_double(model_->init_phi);
        const double q_d = to_double(model_->init_q);
        if (phi_d < kMaxFastPhi) {
            const double kd = sample_digit_fast(phi_d, q_d, u, f0);
            if (kd < kMaxFastDigit) {
                b_ = BigInt(kd);
            } else {
                b_ = sample_digit_exact(model_->init_phi, model_->init_q,
                                        rational_from_double(u), f0);
            }
        } else {
            b_ = sample_digit_exact(model_->init_phi, model_->init_q,
                                    rational_from_double(u), f0);
        }
    }
    log_b_ = log_big(b_);
    digit_exact_ = true;
    started_ = true;
}

BigInt ChainSampler::draw_digit_exact_state(const Rational& phi, const Rational& q,
                                            const DistributionFamily& f) {
    Rational u;
    if (opt_.mode == SampleMode::exact)
        u = rng_.next_dyadic(opt_.v_bits);
    else
        u = rational_from_double(rng_.next_u01());
    return sample_digit_exact(phi, q, u, f);
}

double ChainSampler::next_ratio() {
    if (opt_.mode == SampleMode::exact) return to_double(next_ratio_exact());
    if (!started_) start();
    const std::uint64_t n = ++step_;
    const DistributionFamily& f = model_->family_at(n);
    have_last_exact_ = false;

    if (digit_exact_) {
        const Rational phi = model_->phi(b_);
        const Rational q = model_->q(b_, n);
        const double phi_d = to_double(phi);
        const double q_d = to_double(q);
        double r = 0.0;
        BigInt k;
        bool drew_fast = false;
        if (phi_d < kMaxFastPhi) {
            const double u = rng_.next_u01();
            const double kd = sample_digit_fast(phi_d, q_d, u, f);
            if (kd < kMaxFastDigit) {
                k = BigInt(kd);
                r = r_from_digits_d(phi_d, kd, q_d);
                drew_fast = true;
            } else {
                k = sample_digit_exact(phi, q, rational_from_double(u), f);
            }
        } else {
            k = draw_digit_exact_state(phi, q, f);
        }
        if (!drew_fast) r = to_double(r_from_digits(phi, k, q));
        b_ = k;
        log_b_ = log_big(b_);
        if (mpz_sizeinbase(b_.get_mpz_t(), 2) > opt_.fast_exact_bits) {
            digit_exact_ = false;  // log phase from here on
            b_ = 0;
        }
        return r;
    }

    // Log phase: R = 1/V up to a relative error below 2^-(fast_exact_bits-12).
    const double lphi = model_->phi.log_phi_from_log_h(log_b_);
    const double q_d = model_->q.value_d(log_b_, n);
    const double u = rng_.next_u01();
    const double v = f.inv_cdf(u);
    const double growth = (1.0 + q_d) / v - q_d;  // >= 1
    log_b_ = lphi + std::log(growth);
    return 1.0 / v;
}

Rational ChainSampler::next_ratio_exact() {
    if (opt_.mode != SampleMode::exact)
        throw std::logic_error("sampler: exact ratios need exact mode");
    if (!started_) start();
    const std::uint64_t n = ++step_;
    const DistributionFamily& f = model_->family_at(n);
    const Rational phi = model_->phi(b_);
    const Rational q = model_->q(b_, n);
    const BigInt k = draw_digit_exact_state(phi, q, f);
    if (mpz_sizeinbase(k.get_mpz_t(), 2) > opt_.trajectory_bit_cap) {
        --step_;
        throw CappedTrajectoryError(
            "exact trajectory digit exceeded " + std::to_string(opt_.trajectory_bit_cap) +
                " bits at step " + std::to_string(n),
            Trajectory{});
    }
    last_r_exact_ = r_from_digits(phi, k, q);
    have_last_exact_ = true;
    b_ = k;
    log_b_ = log_big(b_);
    return last_r_exact_;
}

// --- helpers -----------------------------------------------------------------

Trajectory sample_trajectory(const ModelSpec& model, std::size_t n_digits,
                             RandomStream rng, const SamplerOptions& opt) {
    Trajectory t;
    if (n_digits == 0) {
        t.digits_exact_complete = true;
        return t;
    }
    ChainSampler cs(model, rng, opt);
    cs.start();
    auto record_digit = [&]() {
        t.log_b.push_back(cs.log_digit());
        if (cs.digit_is_exact()) t.b.push_back(cs.digit());
    };
    record_digit();
    for (std::size_t j = 1; j < n_digits; ++j) {
        try {
            if (opt.mode == SampleMode::exact) {
                const Rational r = cs.next_ratio_exact();
                t.r.push_back(to_double(r));
                t.r_exact.push_back(r);
            } else {
                t.r.push_back(cs.next_ratio());
            }
        } catch (const CappedTrajectoryError& e) {
            t.digits_exact_complete = false;
            throw CappedTrajectoryError(e.what(), std::move(t));
        }
        record_digit();
    }
    t.digits_exact_complete = (t.b.size() == t.log_b.size());
    return t;
}

DigitSequence sample_x_expansion(Scheme scheme, RandomStream& rng, unsigned bits,
                                 const ExpandOptions& opt) {
    Rational x = rng.next_dyadic(bits);
    while (x == 1) x = rng.next_dyadic(bits);  // expansion needs (0,1)
    return expand(x, scheme, opt);
}

}  // namespace opplab
