#pragma once

#include "mcs/annuity.hpp"
#include "mcs/market.hpp"
#include "mcs/strategies.hpp"
#include "mcs/surface.hpp"

namespace mcs {

struct PdeOptions {
    double theta = 0.5;      // time weighting: 0.5 Crank-Nicolson, 1 implicit Euler
    int rannacher_steps = 0; // leading implicit-Euler steps (optional damping)
    double picard_tol = 1e-10;
    int picard_max_iter = 50;
};

// Backward solve of the martingale-consumption factor PDE
//
//   0 = a_t + a_r mu + (sigma_r^2/2) a_rr + 1
//       - a_r sigma_r^2 (D_X - D_a) - a [r + D_X lambda1 sigma_r + pi2 lambda2 sigma22]
//
// with a(T, .) = 0, where D_X sigma_r = pi1 sigma11 + pi2 sigma21 and
// D_a = -a_r/a is Picard-lagged within each implicit step. Rate boundaries
// are artificial: the PDE is imposed there with one-sided first-derivative
// stencils and the second derivative taken from the adjacent interior node.
FactorSurface solve_mcs_pde(const VasicekMarket& market, const InvestmentStrategy& pi,
                            const Grid2D& grid, const PdeOptions& opts = {});

// Linear Feynman-Kac solve for the annuity certain:
//
//   0 = abar_t + 1 - r abar + abar_r [mu + lambda1 sigma_r] + (sigma_r^2/2) abar_rr
FactorSurface solve_annuity_pde(const VasicekMarket& market, const Grid2D& grid,
                                const PdeOptions& opts = {});

// Replicating strategy of the fixed-rate annuity: pi2 = 0 and
// pi1(t, r) = D_abar(t, r) sigma_r / sigma11(t, r), with the duration taken
// from the surface. Throws SpanningError where sigma11 vanishes.
InvestmentStrategy hedge_strategy(const VasicekMarket& market, const FactorSurface& abar);

// Same strategy from the closed-form Vasicek duration instead of a surface.
InvestmentStrategy hedge_strategy_closed_form(const VasicekMarket& market);

// Residual of the ansatz form a = B_{r g + h} in the simplified factor PDE
//
//   0 = -H1 - H2 + a_r [mu - sigma_r^2 (D_X - D_a)] + (sigma_r^2/2) a_rr
//       - a [D_X lambda1 sigma_r + pi2 lambda2 sigma22 - h(t,t)]
//
// evaluated by quadrature and finite differences in r. A diagnostic: nonzero
// values are reported, not errors.
double simplified_pde_residual(const AnnuityAnsatz& ansatz, const VasicekMarket& market,
                               const InvestmentStrategy& pi, double t, double r, double T,
                               double fd_step = 1e-2);

// Consumption drift alpha_c evaluated from a surface by finite differences at
// an interior grid node; ~0 for surfaces solving the factor PDE.
double alpha_c_residual(const FactorSurface& surface, const VasicekMarket& market,
                        const InvestmentStrategy& pi, int it, int jr);

// Interest-rate sensitivities bundled as (t, r) maps.
struct Sensitivities {
    std::function<double(double, double)> D_X;    // from pi and the sigma functions
    std::function<double(double, double)> D_a;    // from a factor surface
    std::function<double(double, double)> D_abar; // closed-form annuity duration
};
Sensitivities make_sensitivities(const VasicekMarket& market, const InvestmentStrategy& pi,
                                 const FactorSurface& surface);

} // namespace mcs
