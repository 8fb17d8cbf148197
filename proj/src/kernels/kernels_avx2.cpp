// AVX2 backend. Mirrors kernels_scalar.cpp exactly: vector lane l holds the
// partial sum of indices == l (mod 4), the tail is folded in scalar after the
// vector loop, and the horizontal combine is ((l0+l1)+(l2+l3)). mul+add only,
// no FMA intrinsics, TU built with -ffp-contract=off: additions and products
// round identically to the scalar reference, so results match bit for bit.

#include "opplab/kernels.hpp"

#ifdef OPPLAB_HAVE_AVX2_TU

#include <immintrin.h>

namespace opplab::kernels::avx2 {

namespace {

inline void spill(__m256d v, double acc[4]) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    acc[0] = lanes[0];
    acc[1] = lanes[1];
    acc[2] = lanes[2];
    acc[3] = lanes[3];
}

inline double combine4(const double acc[4]) {
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

}  // namespace

double dot(const double* a, const double* x, std::size_t n) {
    __m256d vacc = _mm256_setzero_pd();
    const std::size_t nb = n & ~std::size_t(3);
    for (std::size_t i = 0; i < nb; i += 4) {
        const __m256d va = _mm256_loadu_pd(a + i);
        const __m256d vx = _mm256_loadu_pd(x + i);
        vacc = _mm256_add_pd(vacc, _mm256_mul_pd(va, vx));
    }
    double acc[4];
    spill(vacc, acc);
    for (std::size_t i = nb; i < n; ++i) acc[i - nb] += a[i] * x[i];
    return combine4(acc);
}

double dot_min(const double* a, const double* x, const double* cap, std::size_t n) {
    __m256d vacc = _mm256_setzero_pd();
    const std::size_t nb = n & ~std::size_t(3);
    for (std::size_t i = 0; i < nb; i += 4) {
        const __m256d va = _mm256_loadu_pd(a + i);
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d vc = _mm256_loadu_pd(cap + i);
        // minpd(x, c) returns c on ties; scalar (x < c ? x : c) also yields c.
        // Equal finite doubles share one representation, so the tie case is
        // bit-identical (inputs here are nonnegative, no -0.0 vs +0.0 pair).
        vacc = _mm256_add_pd(vacc, _mm256_mul_pd(va, _mm256_min_pd(vx, vc)));
    }
    double acc[4];
    spill(vacc, acc);
    for (std::size_t i = nb; i < n; ++i)
        acc[i - nb] += a[i] * (x[i] < cap[i] ? x[i] : cap[i]);
    return combine4(acc);
}

double sum(const double* x, std::size_t n) {
    __m256d vacc = _mm256_setzero_pd();
    const std::size_t nb = n & ~std::size_t(3);
    for (std::size_t i = 0; i < nb; i += 4)
        vacc = _mm256_add_pd(vacc, _mm256_loadu_pd(x + i));
    double acc[4];
    spill(vacc, acc);
    for (std::size_t i = nb; i < n; ++i) acc[i - nb] += x[i];
    return combine4(acc);
}

double sum_min(const double* x, std::size_t n, double cap) {
    __m256d vacc = _mm256_setzero_pd();
    const __m256d vcap = _mm256_set1_pd(cap);
    const std::size_t nb = n & ~std::size_t(3);
    for (std::size_t i = 0; i < nb; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        vacc = _mm256_add_pd(vacc, _mm256_min_pd(vx, vcap));
    }
    double acc[4];
    spill(vacc, acc);
    for (std::size_t i = nb; i < n; ++i) acc[i - nb] += (x[i] < cap ? x[i] : cap);
    return combine4(acc);
}

double sum_min_sq(const double* x, std::size_t n, double cap) {
    __m256d vacc = _mm256_setzero_pd();
    const __m256d vcap = _mm256_set1_pd(cap);
    const std::size_t nb = n & ~std::size_t(3);
    for (std::size_t i = 0; i < nb; i += 4) {
        const __m256d vm = _mm256_min_pd(_mm256_loadu_pd(x + i), vcap);
        vacc = _mm256_add_pd(vacc, _mm256_mul_pd(vm, vm));
    }
    double acc[4];
    spill(vacc, acc);
    for (std::size_t i = nb; i < n; ++i) {
        const double m = (x[i] < cap ? x[i] : cap);
        acc[i - nb] += m * m;
    }
    return combine4(acc);
}

std::size_t count_greater(const double* x, std::size_t n, double t) {
    const __m256d vt = _mm256_set1_pd(t);
    std::size_t c = 0;
    const std::size_t nb = n & ~std::size_t(3);
    for (std::size_t i = 0; i < nb; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        const int mask = _mm256_movemask_pd(_mm256_cmp_pd(vx, vt, _CMP_GT_OQ));
        c += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(mask)));
    }
    for (std::size_t i = nb; i < n; ++i) c += (x[i] > t) ? 1 : 0;
    return c;
}

}  // namespace opplab::kernels::avx2

#endif  // OPPLAB_HAVE_AVX2_TU
