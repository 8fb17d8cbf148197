// Scalar reference backend. The loop shape is the contract: 4 partial
// accumulators fed in lane order, tail elements appended lane-by-lane after
// the blocked part, final combine ((acc0+acc1)+(acc2+acc3)). The AVX2 backend
// reproduces exactly this dataflow, which is what makes the two bit-identical.
// Keep the two files in sync when touching either.

#include "opplab/kernels.hpp"

namespace opplab::kernels::scalar {

namespace {
inline double combine4(const double acc[4]) {
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}
}  // namespace

double dot(const double* a, const double* x, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t nb = n & ~std::size_t(3);
    for (std::size_t i = 0; i < nb; i += 4) {
        acc[0] += a[i] * x[i];
        acc[1] += a[i + 1] * x[i + 1];
        acc[2] += a[i + 2] * x[i + 2];
        acc[3] += a[i + 3] * x[i + 3];
    }
    for (std::size_t i = nb; i < n; ++i) acc[i - nb] += a[i] * x[i];
    return combine4(acc);
}

double dot_min(const double* a, const double* x, const double* cap, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t nb = n & ~std::size_t(3);
    for (std::size_t i = 0; i < nb; i += 4) {
        acc[0] += a[i] * (x[i] < cap[i] ? x[i] : cap[i]);
        acc[1] += a[i + 1] * (x[i + 1] < cap[i + 1] ? x[i + 1] : cap[i + 1]);
        acc[2] += a[i + 2] * (x[i + 2] < cap[i + 2] ? x[i + 2] : cap[i + 2]);
        acc[3] += a[i + 3] * (x[i + 3] < cap[i + 3] ? x[i + 3] : cap[i + 3]);
    }
    for (std::size_t i = nb; i < n; ++i)
        acc[i - nb] += a[i] * (x[i] < cap[i] ? x[i] : cap[i]);
    return combine4(acc);
}

double sum(const double* x, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t nb = n & ~std::size_t(3);
    for (std::size_t i = 0; i < nb; i += 4) {
        acc[0] += x[i];
        acc[1] += x[i + 1];
        acc[2] += x[i + 2];
        acc[3] += x[i + 3];
    }
    for (std::size_t i = nb; i < n; ++i) acc[i - nb] += x[i];
    return combine4(acc);
}

double sum_min(const double* x, std::size_t n, double cap) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t nb = n & ~std::size_t(3);
    for (std::size_t i = 0; i < nb; i += 4) {
        acc[0] += (x[i] < cap ? x[i] : cap);
        acc[1] += (x[i + 1] < cap ? x[i + 1] : cap);
        acc[2] += (x[i + 2] < cap ? x[i + 2] : cap);
        acc[3] += (x[i + 3] < cap ? x[i + 3] : cap);
    }
    for (std::size_t i = nb; i < n; ++i) acc[i - nb] += (x[i] < cap ? x[i] : cap);
    return combine4(acc);
}

double sum_min_sq(const double* x, std::size_t n, double cap) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t nb = n & ~std::size_t(3);
    for (std::size_t i = 0; i < nb; i += 4) {
        const double m0 = (x[i] < cap ? x[i] : cap);
        const double m1 = (x[i + 1] < cap ? x[i + 1] : cap);
        const double m2 = (x[i + 2] < cap ? x[i + 2] : cap);
        const double m3 = (x[i + 3] < cap ? x[i + 3] : cap);
        acc[0] += m0 * m0;
        acc[1] += m1 * m1;
        acc[2] += m2 * m2;
        acc[3] += m3 * m3;
    }
    for (std::size_t i = nb; i < n; ++i) {
        const double m = (x[i] < cap ? x[i] : cap);
        acc[i - nb] += m * m;
    }
    return combine4(acc);
}

std::size_t count_greater(const double* x, std::size_t n, double t) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) c += (x[i] > t) ? 1 : 0;
    return c;
}

}  // namespace opplab::kernels::scalar
