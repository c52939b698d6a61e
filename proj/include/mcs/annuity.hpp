#pragma once

#include <functional>
#include <optional>

#include "mcs/curves.hpp"

namespace mcs {

// Present value at time t of a continuous unit payment stream over [t, T],
// discounted at the rate curve f:
//
//   B_f(t) = integral_t^T exp(-integral_t^u f(s) ds) du
//
// Closed form for constant f, otherwise adaptive Gauss-Legendre with the
// curve's exact antiderivative in the exponent. Absolute tolerance 1e-10.
double annuity_factor(const RateCurve& f, double t, double T, double abs_tol = 1e-10);

// Constant-rate closed form (1 - e^{-rate*(T-t)})/rate, with the rate -> 0
// limit handled.
double annuity_factor_constant(double rate, double t, double T);

// Self-test residual of dB_f/dt = f(t) B_f(t) - 1 via central differences.
// Throws BreakpointError if a breakpoint of f lies within the stencil.
double factor_ode_residual(const RateCurve& f, double t, double T, double fd_step = 1e-4);

// Two-parameter discount structure a(t,r) = B_{r g(t,.) + h(t,.)}(t) with
// g(t,t) = 1. Analytic time-partials of g and h may be supplied; otherwise
// central differences with step 1e-5 are used where partials are needed.
struct AnnuityAnsatz {
    std::function<double(double, double)> g;  // (t, s) -> weight on r
    std::function<double(double, double)> h;  // (t, s) -> additive rate
    std::function<double(double, double)> dg_dt; // optional
    std::function<double(double, double)> dh_dt; // optional

    double g_partial_t(double t, double s) const;
    double h_partial_t(double t, double s) const;
};

// a(t, r) by nested quadrature; zero at t = T, strictly positive before.
double ansatz_surface(const AnnuityAnsatz& ansatz, double t, double r, double T,
                      double abs_tol = 1e-9);

// Leibniz-rule terms of da/dt:
//   H1 = int_t^T exp(-int_t^u r g + h ds) * int_t^u r dg/dt(t,s) ds du
//   H2 = same with dh/dt(t,s) in the inner integral
struct LeibnizTerms {
    double H1 = 0.0;
    double H2 = 0.0;
};
LeibnizTerms leibniz_terms(const AnnuityAnsatz& ansatz, double t, double r, double T,
                           double abs_tol = 1e-8);

// Residual of da/dt = (r + h(t,t)) a - 1 - H1 - H2 with da/dt from central
// differences on ansatz_surface.
double dadt_identity_check(const AnnuityAnsatz& ansatz, double t, double r, double T);

} // namespace mcs
