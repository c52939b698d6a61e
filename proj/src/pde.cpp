#include "mcs/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <vector>

#include "mcs/banded.hpp"
#include "mcs/vasicek_annuity.hpp"

namespace mcs {

namespace {

// Spatial operator L a = D a_rr + b a_r - k a. The rate boundaries are
// artificial, so the PDE itself is imposed there with second-order one-sided
// stencils (4-point second derivative); rows touch at most 4 columns.
struct SpatialOperator {
    std::vector<double> D, b, k;

    // columns touched by row j and their weights; returns the entry count
    int row(int j, int nr, double dr, int* cols, double* w) const {
        const double Dj = D[static_cast<std::size_t>(j)];
        const double bj = b[static_cast<std::size_t>(j)];
        const double kj = k[static_cast<std::size_t>(j)];
        const double inv_dr = 1.0 / dr;
        const double inv_dr2 = inv_dr * inv_dr;
        if (j == 0) {
            cols[0] = 0; cols[1] = 1; cols[2] = 2; cols[3] = 3;
            w[0] = 2.0 * Dj * inv_dr2 - 1.5 * bj * inv_dr - kj;
            w[1] = -5.0 * Dj * inv_dr2 + 2.0 * bj * inv_dr;
            w[2] = 4.0 * Dj * inv_dr2 - 0.5 * bj * inv_dr;
            w[3] = -Dj * inv_dr2;
            return 4;
        }
        if (j == nr - 1) {
            cols[0] = j - 3; cols[1] = j - 2; cols[2] = j - 1; cols[3] = j;
            w[0] = -Dj * inv_dr2;
            w[1] = 4.0 * Dj * inv_dr2 + 0.5 * bj * inv_dr;
            w[2] = -5.0 * Dj * inv_dr2 - 2.0 * bj * inv_dr;
            w[3] = 2.0 * Dj * inv_dr2 + 1.5 * bj * inv_dr - kj;
            return 4;
        }
        cols[0] = j - 1; cols[1] = j; cols[2] = j + 1;
        w[0] = Dj * inv_dr2 - 0.5 * bj * inv_dr;
        w[1] = -2.0 * Dj * inv_dr2 - kj;
        w[2] = Dj * inv_dr2 + 0.5 * bj * inv_dr;
        return 3;
    }

    std::vector<double> apply(const std::vector<double>& a, int nr, double dr) const {
        std::vector<double> out(static_cast<std::size_t>(nr));
        int cols[4];
        double w[4];
        for (int j = 0; j < nr; ++j) {
            const int m = row(j, nr, dr, cols, w);
            double s = 0.0;
            for (int i = 0; i < m; ++i) s += w[i] * a[static_cast<std::size_t>(cols[i])];
            out[static_cast<std::size_t>(j)] = s;
        }
        return out;
    }
};

// solve (I - c L) x = rhs
std::vector<double> implicit_solve(const SpatialOperator& op, double c,
                                   const std::vector<double>& rhs, int nr, double dr) {
    BandedLU lu(nr, 3, 3);
    int cols[4];
    double w[4];
    for (int j = 0; j < nr; ++j) {
        const int m = op.row(j, nr, dr, cols, w);
        for (int i = 0; i < m; ++i) lu.entry(j, cols[i]) += -c * w[i];
        lu.entry(j, j) += 1.0;
    }
    lu.factorize();
    std::vector<double> x = rhs;
    lu.solve(x);
    return x;
}

std::vector<double> duration_from(const std::vector<double>& a, int nr, double dr) {
    std::vector<double> out(static_cast<std::size_t>(nr), 0.0);
    for (int j = 0; j < nr; ++j) {
        double da;
        if (j == 0)
            da = (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * dr);
        else if (j == nr - 1)
            da = (3.0 * a[static_cast<std::size_t>(j)] - 4.0 * a[static_cast<std::size_t>(j - 1)] +
                  a[static_cast<std::size_t>(j - 2)]) /
                 (2.0 * dr);
        else
            da = (a[static_cast<std::size_t>(j + 1)] - a[static_cast<std::size_t>(j - 1)]) /
                 (2.0 * dr);
        const double av = a[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(j)] = (av > 1e-300) ? -da / av : 0.0;
    }
    return out;
}

} // namespace

namespace {

// One theta-weighted backward step of a_t + L a + 1 = 0 from t1 down to t0.
// `coeffs(t)` supplies the operator without the duration term; when
// `nonlinear` is set, sigma_r^2 D_a is Picard-lagged into the advection
// coefficient and iterated to tolerance.
struct Marcher {
    int nr = 0;
    double dr = 0.0;
    double s2 = 0.0;
    bool nonlinear = false;
    std::function<SpatialOperator(double)> coeffs;
    PdeOptions opts;

    std::vector<double> level;    // current values, starts at a(T, .) = 0
    std::vector<double> duration; // converged D_a of the current level

    void init() {
        level.assign(static_cast<std::size_t>(nr), 0.0);
        duration.assign(static_cast<std::size_t>(nr), 0.0); // D_a -> 0 at t = T
    }

    SpatialOperator with_duration(SpatialOperator op, const std::vector<double>& Da) const {
        if (nonlinear && s2 != 0.0)
            for (int j = 0; j < nr; ++j)
                op.b[static_cast<std::size_t>(j)] += s2 * Da[static_cast<std::size_t>(j)];
        return op;
    }

    // `at_terminal` marks the step leaving a(T, .) = 0, where the old-level
    // operator is never evaluated (coefficients may be singular at t = T)
    void step(double t0, double t1, double theta, bool at_terminal, int step_label) {
        const double dt = t1 - t0;
        std::vector<double> rhs(static_cast<std::size_t>(nr), dt);
        if (!at_terminal && theta < 1.0) {
            const SpatialOperator op_old = with_duration(coeffs(t1), duration);
            const auto La = op_old.apply(level, nr, dr);
            for (int j = 0; j < nr; ++j)
                rhs[static_cast<std::size_t>(j)] += level[static_cast<std::size_t>(j)] +
                                                    (1.0 - theta) * dt *
                                                        La[static_cast<std::size_t>(j)];
        } else {
            for (int j = 0; j < nr; ++j)
                rhs[static_cast<std::size_t>(j)] += level[static_cast<std::size_t>(j)];
        }

        const SpatialOperator op_base = coeffs(t0);
        if (!nonlinear || s2 == 0.0) {
            level = implicit_solve(with_duration(op_base, duration), theta * dt, rhs, nr, dr);
            if (nonlinear) duration = duration_from(level, nr, dr);
            return;
        }

        // Picard on the lagged duration, seeded from the previous level
        std::vector<double> Da = duration;
        std::vector<double> a_new;
        double delta = std::numeric_limits<double>::infinity();
        bool converged = false;
        for (int iter = 0; iter < opts.picard_max_iter; ++iter) {
            std::vector<double> candidate =
                implicit_solve(with_duration(op_base, Da), theta * dt, rhs, nr, dr);
            if (iter > 0) {
                delta = 0.0;
                for (int j = 0; j < nr; ++j)
                    delta = std::max(delta, std::abs(candidate[static_cast<std::size_t>(j)] -
                                                     a_new[static_cast<std::size_t>(j)]));
            }
            a_new = std::move(candidate);
            Da = duration_from(a_new, nr, dr);
            if (iter > 0 && delta <= opts.picard_tol) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw NonlinearIterationError(step_label, delta,
                                          "Picard iteration did not reach tolerance");
        level = std::move(a_new);
        duration = std::move(Da);
    }

    // Backward march over the whole grid. The first interval is sub-stepped:
    // the startup level a ~ dt carries the largest relative error, and the
    // consumption-drift diagnostics divide by a there.
    FactorSurface run(const Grid2D& grid, bool check_each_level) {
        const int nt = grid.nt;
        const double dt = grid.dt();
        FactorSurface surf(grid, FactorSurface::Provenance::Pde);
        init();

        // Sub-stepped start: the level at T - dt is where a ~ dt carries the
        // largest relative weight in downstream diagnostics (they divide by
        // a), so it is integrated with 16 sub-steps to keep its relative
        // error at the second-order level of the interior.
        const int substeps = 16;
        double t_hi = grid.T;
        for (int mstep = 1; mstep <= substeps; ++mstep) {
            const double t_lo = grid.T - dt * mstep / substeps;
            const double theta = (opts.rannacher_steps > 0) ? 1.0 : opts.theta;
            step(t_lo, t_hi, theta, mstep == 1, 0);
            t_hi = t_lo;
        }
        for (int j = 0; j < nr; ++j) surf.at(nt - 2, j) = level[static_cast<std::size_t>(j)];

        for (int it = nt - 3; it >= 0; --it) {
            const int step_index = nt - 2 - it;
            const double theta = (step_index < opts.rannacher_steps) ? 1.0 : opts.theta;
            step(grid.t(it), grid.t(it + 1), theta, false, step_index);
            for (int j = 0; j < nr; ++j) surf.at(it, j) = level[static_cast<std::size_t>(j)];
            if (check_each_level)
                for (int j = 0; j < nr; ++j)
                    if (!(level[static_cast<std::size_t>(j)] > 0.0)) {
                        std::ostringstream os;
                        os << "a(t=" << grid.t(it) << ", r=" << grid.r(j)
                           << ") = " << level[static_cast<std::size_t>(j)] << "; slice:";
                        for (int k2 = std::max(0, j - 2); k2 <= std::min(nr - 1, j + 2); ++k2)
                            os << " a[r=" << grid.r(k2)
                               << "]=" << level[static_cast<std::size_t>(k2)];
                        throw PositivityLossError(os.str());
                    }
        }
        surf.check_positive();
        return surf;
    }
};

} // namespace

FactorSurface solve_annuity_pde(const VasicekMarket& market, const Grid2D& grid,
                                const PdeOptions& opts) {
    market.validate();
    grid.validate();
    Marcher m;
    m.nr = grid.nr;
    m.dr = grid.dr();
    m.s2 = market.sigma_r * market.sigma_r;
    m.nonlinear = false;
    m.opts = opts;
    m.coeffs = [&market, &grid](double) {
        SpatialOperator op;
        const int nr = grid.nr;
        op.D.assign(static_cast<std::size_t>(nr), 0.5 * market.sigma_r * market.sigma_r);
        op.b.resize(static_cast<std::size_t>(nr));
        op.k.resize(static_cast<std::size_t>(nr));
        for (int j = 0; j < nr; ++j) {
            const double r = grid.r(j);
            op.b[static_cast<std::size_t>(j)] = market.mu(r) + market.lambda1 * market.sigma_r;
            op.k[static_cast<std::size_t>(j)] = r;
        }
        return op;
    };
    return m.run(grid, false);
}

FactorSurface solve_mcs_pde(const VasicekMarket& market, const InvestmentStrategy& pi,
                            const Grid2D& grid, const PdeOptions& opts) {
    market.validate();
    grid.validate();
    if (pi.regime() != InvestmentStrategy::Regime::State)
        throw ConfigError("solve_mcs_pde needs a state-dependent (t, r) strategy");
    Marcher m;
    m.nr = grid.nr;
    m.dr = grid.dr();
    m.s2 = market.sigma_r * market.sigma_r;
    m.nonlinear = true;
    m.opts = opts;
    // w = pi1 sigma11 + pi2 sigma21, the rate-factor wealth loading; no
    // division by sigma_r anywhere so the degenerate rate is allowed
    m.coeffs = [&market, &grid, &pi](double t) {
        SpatialOperator op;
        const int nr = grid.nr;
        op.D.assign(static_cast<std::size_t>(nr), 0.5 * market.sigma_r * market.sigma_r);
        op.b.resize(static_cast<std::size_t>(nr));
        op.k.resize(static_cast<std::size_t>(nr));
        for (int j = 0; j < nr; ++j) {
            const double r = grid.r(j);
            const auto frac = pi.fractions(t, r);
            const double w = frac[0] * market.sigma11(t, r) + frac[1] * market.sigma21(t, r);
            op.b[static_cast<std::size_t>(j)] = market.mu(r) - market.sigma_r * w;
            op.k[static_cast<std::size_t>(j)] =
                r + w * market.lambda1 + frac[1] * market.lambda2 * market.sigma22;
        }
        return op;
    };
    return m.run(grid, true);
}

InvestmentStrategy hedge_strategy(const VasicekMarket& market, const FactorSurface& abar) {
    market.validate();
    const VasicekMarket m = market;
    auto surf = std::make_shared<const FactorSurface>(abar);
    return InvestmentStrategy::state([m, surf](double t, double r) -> std::array<double, 2> {
        const double s11 = m.sigma11(t, r);
        if (s11 == 0.0) {
            if (m.sigma_r == 0.0) return {0.0, 0.0}; // no rate risk to hedge
            throw SpanningError("sigma11 vanishes at t=" + std::to_string(t));
        }
        return {surf->duration(t, r) * m.sigma_r / s11, 0.0};
    });
}

InvestmentStrategy hedge_strategy_closed_form(const VasicekMarket& market) {
    market.validate();
    const VasicekMarket m = market;
    auto eval = std::make_shared<VasicekAnnuityEvaluator>(m);
    return InvestmentStrategy::state([m, eval](double t, double r) -> std::array<double, 2> {
        const double s11 = m.sigma11(t, r);
        if (s11 == 0.0) {
            if (m.sigma_r == 0.0) return {0.0, 0.0};
            throw SpanningError("sigma11 vanishes at t=" + std::to_string(t));
        }
        return {eval->duration(t, r) * m.sigma_r / s11, 0.0};
    });
}

double simplified_pde_residual(const AnnuityAnsatz& ansatz, const VasicekMarket& market,
                               const InvestmentStrategy& pi, double t, double r, double T,
                               double fd_step) {
    const double h = fd_step;
    const double a = ansatz_surface(ansatz, t, r, T);
    const double a_p = ansatz_surface(ansatz, t, r + h, T);
    const double a_m = ansatz_surface(ansatz, t, r - h, T);
    const double a_r = (a_p - a_m) / (2.0 * h);
    const double a_rr = (a_p - 2.0 * a + a_m) / (h * h);
    const double D_a = (a > 0.0) ? -a_r / a : 0.0;
    const auto terms = leibniz_terms(ansatz, t, r, T);
    const auto frac = pi.fractions(t, r);
    const double w = frac[0] * market.sigma11(t, r) + frac[1] * market.sigma21(t, r);
    const double s2 = market.sigma_r * market.sigma_r;
    // sigma_r^2 (D_X - D_a) = sigma_r w - sigma_r^2 D_a, with no division by sigma_r
    return -terms.H1 - terms.H2 + a_r * (market.mu(r) - market.sigma_r * w + s2 * D_a) +
           0.5 * s2 * a_rr -
           a * (w * market.lambda1 + frac[1] * market.lambda2 * market.sigma22 -
                ansatz.h(t, t));
}

double alpha_c_residual(const FactorSurface& surface, const VasicekMarket& market,
                        const InvestmentStrategy& pi, int it, int jr) {
    const Grid2D& g = surface.grid();
    if (it <= 0 || it >= g.nt - 1 || jr <= 0 || jr >= g.nr - 1)
        throw DomainError("alpha_c residual requires an interior grid node");
    const double t = g.t(it), r = g.r(jr);
    const double a = surface.at(it, jr);
    // time derivative through the scaled factor psi = a/(T - t), whose
    // terminal limit is 1; differencing raw a here loses an order once the
    // 1/a division amplifies the terminal layer
    const double tau = g.T - t;
    auto psi = [&](int level) {
        return (level == g.nt - 1) ? 1.0 : surface.at(level, jr) / (g.T - g.t(level));
    };
    const double psi_t = (psi(it + 1) - psi(it - 1)) / (2.0 * g.dt());
    const double a_t = -psi(it) + tau * psi_t;
    const double a_r = (surface.at(it, jr + 1) - surface.at(it, jr - 1)) / (2.0 * g.dr());
    const double a_rr =
        (surface.at(it, jr + 1) - 2.0 * a + surface.at(it, jr - 1)) / (g.dr() * g.dr());
    const double D_a = -a_r / a;
    const auto frac = pi.fractions(t, r);
    const double w = frac[0] * market.sigma11(t, r) + frac[1] * market.sigma21(t, r);
    const double s2 = market.sigma_r * market.sigma_r;
    const double Aa = a_r * market.mu(r) + 0.5 * s2 * a_rr;
    return r + w * market.lambda1 + frac[1] * market.lambda2 * market.sigma22 -
           (a_t + Aa - a_r * (market.sigma_r * w - s2 * D_a) + 1.0) / a;
}

Sensitivities make_sensitivities(const VasicekMarket& market, const InvestmentStrategy& pi,
                                 const FactorSurface& surface) {
    Sensitivities s;
    const VasicekMarket m = market;
    const InvestmentStrategy strat = pi;
    auto surf = std::make_shared<const FactorSurface>(surface);
    s.D_X = [m, strat](double t, double r) {
        if (m.sigma_r == 0.0)
            throw DomainError("D_X undefined without rate risk (sigma_r = 0)");
        const auto frac = strat.fractions(t, r);
        return (frac[0] * m.sigma11(t, r) + frac[1] * m.sigma21(t, r)) / m.sigma_r;
    };
    s.D_a = [surf](double t, double r) { return surf->duration(t, r); };
    s.D_abar = [m](double t, double r) { return vasicek_annuity_duration(m, t, r); };
    return s;
}

} // namespace mcs
