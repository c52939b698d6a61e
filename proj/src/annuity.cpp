#include "mcs/annuity.hpp"

#include <cmath>

#include "mcs/errors.hpp"
#include "mcs/quadrature.hpp"

namespace mcs {

double annuity_factor_constant(double rate, double t, double T) {
    if (t > T) throw DomainError("annuity factor requires t <= T");
    const double tau = T - t;
    if (rate == 0.0) return tau;
    return -std::expm1(-rate * tau) / rate;
}

double annuity_factor(const RateCurve& f, double t, double T, double abs_tol) {
    if (t > T) throw DomainError("annuity factor requires t <= T");
    if (t == T) return 0.0;
    if (f.is_constant()) return annuity_factor_constant(f.constant_value(), t, T);
    const double F_t = f.antiderivative(t);
    const auto integrand = [&](double u) { return std::exp(-(f.antiderivative(u) - F_t)); };
    return adaptive_gauss_legendre_split(integrand, t, T, f.breakpoints(), abs_tol);
}

double factor_ode_residual(const RateCurve& f, double t, double T, double fd_step) {
    if (t >= T) throw DomainError("factor ODE residual requires t < T");
    for (double b : f.breakpoints())
        if (std::abs(b - t) <= fd_step)
            throw BreakpointError("rate curve breaks within the finite-difference stencil at t=" +
                                  std::to_string(t));
    const double lo = std::max(0.0, t - fd_step);
    const double hi = std::min(T, t + fd_step);
    const double dB = (annuity_factor(f, hi, T, 1e-12) - annuity_factor(f, lo, T, 1e-12)) / (hi - lo);
    const double B = annuity_factor(f, t, T, 1e-12);
    return dB - (f(t) * B - 1.0);
}

double AnnuityAnsatz::g_partial_t(double t, double s) const {
    if (dg_dt) return dg_dt(t, s);
    const double h0 = 1e-5;
    return (g(t + h0, s) - g(t - h0, s)) / (2.0 * h0);
}

double AnnuityAnsatz::h_partial_t(double t, double s) const {
    if (dh_dt) return dh_dt(t, s);
    const double h0 = 1e-5;
    return (h(t + h0, s) - h(t - h0, s)) / (2.0 * h0);
}

namespace {

// inner discount integral int_t^u r g(t,s) + h(t,s) ds
double inner_rate_integral(const AnnuityAnsatz& ansatz, double t, double r, double u,
                           double tol) {
    if (u == t) return 0.0;
    return adaptive_gauss_legendre(
        [&](double s) { return r * ansatz.g(t, s) + ansatz.h(t, s); }, t, u, tol);
}

} // namespace

double ansatz_surface(const AnnuityAnsatz& ansatz, double t, double r, double T,
                      double abs_tol) {
    if (t > T) throw DomainError("ansatz surface requires t <= T");
    if (t == T) return 0.0;
    const double inner_tol = abs_tol * 1e-2;
    return adaptive_gauss_legendre(
        [&](double u) { return std::exp(-inner_rate_integral(ansatz, t, r, u, inner_tol)); }, t,
        T, abs_tol);
}

LeibnizTerms leibniz_terms(const AnnuityAnsatz& ansatz, double t, double r, double T,
                           double abs_tol) {
    if (t > T) throw DomainError("Leibniz terms require t <= T");
    LeibnizTerms out;
    if (t == T) return out;
    const double inner_tol = abs_tol * 1e-2;
    out.H1 = adaptive_gauss_legendre(
        [&](double u) {
            const double disc = std::exp(-inner_rate_integral(ansatz, t, r, u, inner_tol));
            const double inner = adaptive_gauss_legendre(
                [&](double s) { return r * ansatz.g_partial_t(t, s); }, t, u, inner_tol);
            return disc * inner;
        },
        t, T, abs_tol);
    out.H2 = adaptive_gauss_legendre(
        [&](double u) {
            const double disc = std::exp(-inner_rate_integral(ansatz, t, r, u, inner_tol));
            const double inner = adaptive_gauss_legendre(
                [&](double s) { return ansatz.h_partial_t(t, s); }, t, u, inner_tol);
            return disc * inner;
        },
        t, T, abs_tol);
    return out;
}

double dadt_identity_check(const AnnuityAnsatz& ansatz, double t, double r, double T) {
    const double step = std::min(1e-3, 0.5 * (T - t));
    const double a_plus = ansatz_surface(ansatz, t + step, r, T, 1e-10);
    const double a_minus = ansatz_surface(ansatz, t - step, r, T, 1e-10);
    const double dadt = (a_plus - a_minus) / (2.0 * step);
    const double a = ansatz_surface(ansatz, t, r, T, 1e-10);
    const auto terms = leibniz_terms(ansatz, t, r, T);
    const double rhs = (r + ansatz.h(t, t)) * a - 1.0 - terms.H1 - terms.H2;
    return dadt - rhs;
}

} // namespace mcs
