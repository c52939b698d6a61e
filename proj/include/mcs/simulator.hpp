#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mcs/market.hpp"
#include "mcs/rule.hpp"
#include "mcs/strategies.hpp"
#include "mcs/surface.hpp"

namespace mcs {

enum class SimScheme { ExactLognormal, Euler };

// Monte Carlo configuration. Paths are organized in fixed-size batches; batch
// b draws from an independent stream seeded by (master_seed, b), so results
// are bit-identical for a given (config, master_seed) regardless of the
// thread count. Antithetic increments are on by default: paths come in +/-
// pairs and inference treats each pair as one unit.
struct SimConfig {
    double x0 = 1.0;
    int steps = 1000;       // time steps; the state is simulated up to T - dt
    long paths = 10000;
    std::uint64_t master_seed = 20260809;
    SimScheme scheme = SimScheme::ExactLognormal;
    std::vector<double> report_times; // empty -> 10 equispaced times
    bool antithetic = true;
    int threads = 0;        // 0 -> hardware concurrency
    bool record_full = false;

    void validate() const;
};

// Per-path values at report times plus terminal diagnostics. Row-major
// layout: report arrays index [path * n_reports + k].
struct PathBundle {
    double T = 0.0;
    double x0 = 0.0;
    double c0 = 0.0; // consumption at t = 0, deterministic
    int steps = 0;
    long paths = 0;
    bool antithetic = false;
    bool stochastic_rate = false;
    SimScheme scheme = SimScheme::ExactLognormal;
    std::uint64_t master_seed = 0;

    std::vector<int> report_steps;
    std::vector<double> report_times;

    std::vector<double> c;        // consumption
    std::vector<double> x;        // wealth
    std::vector<double> r;        // short rate (stochastic-rate runs)
    std::vector<double> c_max;    // running max of c over [0, t]
    std::vector<double> c_min;    // running min of c over [0, t]
    std::vector<double> qv_logc;  // cumulative realized quadratic variation of log c
    std::vector<double> pred_var; // cumulative predicted integral of sigma_c^2

    std::vector<double> terminal_raw;      // X(t_last)/x0
    std::vector<double> terminal_deflated; // X(t_last)/(x0 Y^pi(t_last))
    std::vector<double> budget_residual;   // 1 - (1/x0) * quadrature of c/Y^pi

    // full recording (small runs only)
    std::vector<double> full_x, full_c, full_r;

    int n_reports() const { return static_cast<int>(report_steps.size()); }
    double report_c(long path, int k) const {
        return c[static_cast<std::size_t>(path) * static_cast<std::size_t>(n_reports()) +
                 static_cast<std::size_t>(k)];
    }
};

PathBundle simulate(const DeterministicMarket& market, const InvestmentStrategy& pi,
                    const ConsumptionRule& rule, const SimConfig& cfg);

PathBundle simulate(const VasicekMarket& market, const InvestmentStrategy& pi,
                    const ConsumptionRule& rule, const SimConfig& cfg);

// Statistical martingale diagnostics.
struct ReportRow {
    double t = 0.0;
    double mean_c = 0.0;
    double se = 0.0;
    double z = 0.0;          // (mean - c0)/se, 0 when the deviation is exactly 0
    double drift_rate = 0.0; // log(mean/c0)/t
};

// OLS of c(t2) - c(t1) on [1, c(t1), running max, running min, realized QV],
// heteroskedasticity-robust t statistics. Regressors with no cross-path
// variation are dropped (inactive, t = 0).
struct ConditionalTest {
    double t1 = 0.0, t2 = 0.0;
    std::array<double, 4> coef{};
    std::array<double, 4> t_stat{};
    std::array<bool, 4> active{};
    bool valid = false;
};

struct MartingaleReport {
    double c0 = 0.0;
    long units = 0; // independent inference units (pairs when antithetic)
    std::vector<ReportRow> rows;
    ConditionalTest conditional;
    double max_abs_z = 0.0;
};

MartingaleReport martingale_test(const PathBundle& bundle);

struct ExhaustionStats {
    double max_raw = 0.0;        // max over paths of X(t_last)/x0
    double max_deflated = 0.0;   // max over paths of X(t_last)/(x0 Y^pi(t_last))
    double max_budget_residual = 0.0; // max |1 - quadrature(c/Y^pi)/x0|
};

ExhaustionStats exhaustion_check(const PathBundle& bundle);

// Realized vs predicted consumption variance per report window.
struct VolRow {
    double t0 = 0.0, t1 = 0.0;
    double realized = 0.0;  // mean over paths of QV of log c over the window
    double predicted = 0.0; // mean over paths of integrated sigma_c^2
    double sigma_c = 0.0;   // predicted sigma_c at the window start (at mean r)
    double rel_err = 0.0;
};

std::vector<VolRow> vol_check(const PathBundle& bundle, const VasicekMarket& market,
                              const InvestmentStrategy& pi, const FactorSurface& surface);

} // namespace mcs
