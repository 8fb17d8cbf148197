#pragma once

// Digit-chain sampling.
//
// Exact mode: the uniform draw u is a dyadic rational (default 64 bits, up to
// 128) and the digit is the exact inverse-transform cell, decided by rational
// comparisons u <= F(delta(phi, k, q)) whenever F maps rationals to rationals
// (true for every preset family). Digits are exact BigInts; each step also
// yields the exact ratio R_n. A digit outgrowing trajectory_bit_cap raises
// CappedTrajectoryError carrying the prefix.
//
// Fast mode: u is a 53-bit dyadic double, V = F^{-1}(u) in double, and the
// chain runs through three phases as digits grow:
//   1. double phase   - everything fits comfortably in doubles; digits exact.
//   2. bigint phase   - digits up to fast_exact_bits bits, still exact (the
//                       draw V is a double and hence an exact dyadic, so the
//                       digit floor is computed in exact arithmetic).
//   3. log phase      - only log(B_n) is tracked; R_n = 1/V, whose relative
//                       error vs the exact ratio is below 2^-500 here.
// Cell boundaries in phase 1 are resolved at double precision; the measure of
// misassigned cells is ~2^-50 per step. Sylvester log-digits overflow the
// double exponent range after ~1000 steps and print as "inf"; ratios are
// unaffected.

#include "opplab/model.hpp"
#include "opplab/rng.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace opplab {
enum class Scheme;  // expansion.hpp
struct DigitSequence;
struct ExpandOptions;

enum class SampleMode { exact, fast };

struct SamplerOptions {
    SampleMode mode = SampleMode::fast;
    unsigned v_bits = 64;                      // exact-mode dyadic precision (1..128)
    std::size_t trajectory_bit_cap = 1000000;  // exact mode: digit size limit
    std::size_t fast_exact_bits = 512;         // fast mode: log tracking beyond this
};

struct Trajectory {
    std::vector<BigInt> b;         // exactly tracked digits (prefix of the chain)
    std::vector<double> log_b;     // ln B_n for every step (always full length)
    std::vector<double> r;         // R_1 .. R_{n-1}
    std::vector<Rational> r_exact; // exact mode only
    bool digits_exact_complete = false;  // b covers the whole chain
};

// Exact mode ran into the digit-size cap; prefix holds what was sampled.
class CappedTrajectoryError : public std::runtime_error {
public:
    CappedTrajectoryError(std::string what, Trajectory prefix)
        : std::runtime_error(std::move(what)), prefix_(std::move(prefix)) {}
    const Trajectory& prefix() const { return prefix_; }

private:
    Trajectory prefix_;
};

// One conditional digit draw in exact arithmetic: the unique admissible k
// with F(delta(k+1)) < u <= F(delta(k)), clamped to k_min = ceil(phi) when u
// lands above F(delta(k_min)) (non-integral phi boundary cell).
BigInt sample_digit_exact(const Rational& phi, const Rational& q, const Rational& u,
                          const DistributionFamily& f);

// Float counterpart: k = max(ceil(phi), floor(phi(1+q)/V - phi q)) with
// V = F^{-1}(u), plus a +-1 fixup against the double CDF so the cell
// inequalities hold at double precision. Returns the digit as a double
// (exactly representable: the caller only uses this path for k < 2^50).
double sample_digit_fast(double phi, double q, double u, const DistributionFamily& f);

// Stateful chain walker. One RandomStream per chain; each step consumes one
// draw, so trajectories are reproducible from (seed, stream) alone.
class ChainSampler {
public:
    ChainSampler(const ModelSpec& model, RandomStream rng, SamplerOptions opt = {});

    // Draws B_1. Implicit on the first next_ratio(); explicit start() lets
    // trajectory assembly record the initial digit.
    void start();

    // Draws B_{j+1} and returns R_j (j = 1, 2, ... in call order).
    double next_ratio();
    // Exact-mode variant; throws logic_error in fast mode.
    Rational next_ratio_exact();

    std::uint64_t steps_done() const { return step_; }
    bool digit_is_exact() const { return digit_exact_; }
    const BigInt& digit() const;        // current B_n (exact phases)
    double log_digit() const { return log_b_; }

private:
    BigInt draw_digit_exact_state(const Rational& phi, const Rational& q,
                                  const DistributionFamily& f);

    const ModelSpec* model_;
    RandomStream rng_;
    SamplerOptions opt_;
    bool started_ = false;
    std::uint64_t step_ = 0;  // ratios emitted so far

    // chain state
    bool digit_exact_ = true;
    BigInt b_;        // valid while digit_exact_
    double log_b_ = 0.0;
    Rational last_r_exact_;
    bool have_last_exact_ = false;
};

// Convenience: full trajectory with n_digits digits (so n_digits - 1 ratios).
Trajectory sample_trajectory(const ModelSpec& model, std::size_t n_digits,
                             RandomStream rng, const SamplerOptions& opt = {});

// Oracle-side sampler for the law-equivalence tests: draw x uniform dyadic on
// (0,1) with the given mantissa width and expand it classically.
DigitSequence sample_x_expansion(Scheme scheme, RandomStream& rng, unsigned bits,
                                 const ExpandOptions& opt);

}  // namespace opplab
