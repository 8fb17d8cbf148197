#pragma once

// Adaptive Simpson integration, used by the analytic oracle to cross-check
// its closed-form moments against direct integrals. Panels split until the
// classic |S_fine - S_coarse| <= 15 tol criterion holds; depth 20 bounds the
// work at about a million panels.

#include <cmath>

namespace opplab {

namespace detail {

inline double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adapt(const F& f, double a, double fa, double b, double fb, double m, double fm,
             double whole, double tol, int depth, bool* converged) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(a, fa, m, fm, flm);
    const double right = simpson(m, fm, b, fb, frm);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    if (depth <= 0) {
        if (converged) *converged = false;
        return left + right + delta / 15.0;
    }
    return adapt(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1, converged) +
           adapt(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1, converged);
}

}  // namespace detail

template <class F>
double integrate(const F& f, double a, double b, double abs_tol = 1e-10,
                 int max_depth = 20, bool* converged = nullptr) {
    if (converged) *converged = true;
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b);
    const double m = 0.5 * (a + b), fm = f(m);
    const double whole = detail::simpson(a, fa, b, fb, fm);
    return detail::adapt(f, a, fa, b, fb, m, fm, whole, abs_tol, max_depth, converged);
}

}  // namespace opplab
