#pragma once

// Test-only brute-force oracles, kept independent of the library's
// quadrature path: plain composite Simpson rules.

#include <cmath>
#include <functional>

namespace oracle {

inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2 != 0) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + h * i) * (i % 2 == 1 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// nested Simpson for int_t^T exp(-int_t^u rate(s) ds) du
inline double nested_annuity(const std::function<double(double)>& rate, double t, double T,
                             int n_outer, int n_inner) {
    return simpson(
        [&](double u) {
            if (u <= t) return 1.0;
            return std::exp(-simpson(rate, t, u, n_inner));
        },
        t, T, n_outer);
}

// nested Simpson for the ansatz surface with a two-argument rate r*g(t,s)+h(t,s)
inline double nested_ansatz(const std::function<double(double, double)>& g,
                            const std::function<double(double, double)>& h, double t, double r,
                            double T, int n_outer, int n_inner) {
    return nested_annuity([&](double s) { return r * g(t, s) + h(t, s); }, t, T, n_outer,
                          n_inner);
}

} // namespace oracle
