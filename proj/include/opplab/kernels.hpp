#pragma once

// =============================================================================
// Reduction kernels for the Monte-Carlo statistics paths.
//
// Two backends: a scalar reference and an AVX2 variant, selected once at
// runtime. The scalar reference deliberately mirrors the vector layout
// (4 partial accumulators, identical combine order, no FMA, TUs built with
// -ffp-contract=off), so both backends produce bit-identical results and the
// equivalence tests can assert exact equality. Published numbers never depend
// on which backend the host picks.
//
// These cover the hot loops only: weighted sums, capped sums/moments, tail
// counting. Everything exact-arithmetic or branchy (bignum expansion, digit
// sampling, quadrature) stays ordinary scalar code elsewhere.
// =============================================================================

#include <cstddef>

namespace opplab::kernels {

// sum_i a[i] * x[i]
double dot(const double* a, const double* x, std::size_t n);

// sum_i a[i] * min(x[i], cap[i])   (per-element caps)
double dot_min(const double* a, const double* x, const double* cap, std::size_t n);

// sum_i x[i]
double sum(const double* x, std::size_t n);

// sum_i min(x[i], cap) and sum_i min(x[i], cap)^2 (shared scalar cap).
// Caps and data are finite and nonnegative here; the NaN/-0.0 corner cases of
// vector min do not arise.
double sum_min(const double* x, std::size_t n, double cap);
double sum_min_sq(const double* x, std::size_t n, double cap);

// #{ i : x[i] > t }, strict
std::size_t count_greater(const double* x, std::size_t n, double t);

// Name of the backend the dispatcher picked ("avx2" or "scalar").
const char* backend_name();

// Test hook: "scalar" pins the reference backend, "auto" restores runtime
// detection. Unknown names throw. Not used by the pipelines.
void force_backend(const char* name);

bool avx2_supported();

namespace scalar {
double dot(const double* a, const double* x, std::size_t n);
double dot_min(const double* a, const double* x, const double* cap, std::size_t n);
double sum(const double* x, std::size_t n);
double sum_min(const double* x, std::size_t n, double cap);
double sum_min_sq(const double* x, std::size_t n, double cap);
std::size_t count_greater(const double* x, std::size_t n, double t);
}  // namespace scalar

#ifdef OPPLAB_HAVE_AVX2_TU
namespace avx2 {
// Callable only when avx2_supported(); the dispatcher guards this.
double dot(const double* a, const double* x, std::size_t n);
double dot_min(const double* a, const double* x, const double* cap, std::size_t n);
double sum(const double* x, std::size_t n);
double sum_min(const double* x, std::size_t n, double cap);
double sum_min_sq(const double* x, std::size_t n, double cap);
std::size_t count_greater(const double* x, std::size_t n, double t);
}  // namespace avx2
#endif

}  // namespace opplab::kernels
