// Backend selection. One function-pointer table, filled in on first use.

#include "opplab/kernels.hpp"

#include <atomic>
#include <stdexcept>
#include <string>

namespace opplab::kernels {

namespace {

struct Ops {
    double (*dot)(const double*, const double*, std::size_t);
    double (*dot_min)(const double*, const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*sum_min)(const double*, std::size_t, double);
    double (*sum_min_sq)(const double*, std::size_t, double);
    std::size_t (*count_greater)(const double*, std::size_t, double);
    const char* name;
};

constexpr Ops kScalarOps = {scalar::dot,     scalar::dot_min,    scalar::sum,
                            scalar::sum_min, scalar::sum_min_sq, scalar::count_greater,
                            "scalar"};

#ifdef OPPLAB_HAVE_AVX2_TU
constexpr Ops kAvx2Ops = {avx2::dot,     avx2::dot_min,    avx2::sum,
                          avx2::sum_min, avx2::sum_min_sq, avx2::count_greater,
                          "avx2"};
#endif

const Ops* detect() {
#ifdef OPPLAB_HAVE_AVX2_TU
    if (avx2_supported()) return &kAvx2Ops;
#endif
    return &kScalarOps;
}

std::atomic<const Ops*> g_ops{nullptr};

const Ops& ops() {
    const Ops* p = g_ops.load(std::memory_order_acquire);
    if (!p) {
        p = detect();
        g_ops.store(p, std::memory_order_release);
    }
    return *p;
}

}  // namespace

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

const char* backend_name() { return ops().name; }

void force_backend(const char* name) {
    const std::string s = name ? name : "";
    if (s == "auto") {
        g_ops.store(detect(), std::memory_order_release);
    } else if (s == "scalar") {
        g_ops.store(&kScalarOps, std::memory_order_release);
    }
#ifdef OPPLAB_HAVE_AVX2_TU
    else if (s == "avx2") {
        if (!avx2_supported()) throw std::runtime_error("kernels: host has no AVX2");
        g_ops.store(&kAvx2Ops, std::memory_order_release);
    }
#endif
    else {
        throw std::invalid_argument("kernels: unknown backend '" + s + "'");
    }
}

double dot(const double* a, const double* x, std::size_t n) { return ops().dot(a, x, n); }
double dot_min(const double* a, const double* x, const double* cap, std::size_t n) {
    return ops().dot_min(a, x, cap, n);
}
double sum(const double* x, std::size_t n) { return ops().sum(x, n); }
double sum_min(const double* x, std::size_t n, double cap) { return ops().sum_min(x, n, cap); }
double sum_min_sq(const double* x, std::size_t n, double cap) {
    return ops().sum_min_sq(x, n, cap);
}
std::size_t count_greater(const double* x, std::size_t n, double t) {
    return ops().count_greater(x, n, t);
}

}  // namespace opplab::kernels
