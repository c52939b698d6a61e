#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mcs/annuity.hpp"
#include "mcs/errors.hpp"
#include "mcs/pde.hpp"
#include "mcs/simulator.hpp"
#include "mcs/vasicek_annuity.hpp"

using namespace mcs;

namespace {

DeterministicMarket single_asset(double T, double r, double alpha, double sigma) {
    return DeterministicMarket(T, RateCurve::constant(r), {RateCurve::constant(alpha)},
                               {{RateCurve::constant(sigma)}});
}

InvestmentStrategy const_pi(double p) {
    return InvestmentStrategy::deterministic({RateCurve::constant(p)});
}

ConsumptionRule mcs_rule(const DeterministicMarket& m, const InvestmentStrategy& pi) {
    return ConsumptionRule::deterministic(ConsumptionRule::Kind::McsDeterministic,
                                          mcs_rate_curve(m, pi), m.horizon());
}

VasicekMarket glide_market() {
    VasicekMarket m;
    m.kappa = 0.5;
    m.theta = 0.03;
    m.sigma_r = 0.01;
    m.r0 = 0.03;
    m.lambda1 = 0.1;
    m.lambda2 = 0.2;
    m.sigma22 = 0.18;
    m.T = 20.0;
    m.sigma11 = VasicekMarket::zcb_volatility(m.kappa, m.sigma_r, m.T);
    m.sigma21 = [](double, double) { return 0.0; };
    return m;
}

} // namespace

TEST_CASE("money-market-only run reproduces the constant consumption stream") {
    DeterministicMarket m(20.0, RateCurve::constant(0.03));
    const auto pi = InvestmentStrategy::deterministic({});
    const auto rule = mcs_rule(m, pi);
    SimConfig cfg;
    cfg.steps = 2000;
    cfg.paths = 16;
    const auto bundle = simulate(m, pi, rule, cfg);

    const double c_star = 1.0 / annuity_factor_constant(0.03, 0.0, 20.0);
    CHECK(bundle.c0 == doctest::Approx(c_star).epsilon(1e-13));
    for (long p = 0; p < bundle.paths; ++p)
        for (int k = 0; k < bundle.n_reports(); ++k)
            CHECK(std::abs(bundle.report_c(p, k) - c_star) <= 1e-9 * c_star);

    const auto ex = exhaustion_check(bundle);
    const double dt = 20.0 / cfg.steps;
    CHECK(ex.max_raw <= 2.0 * dt / 20.0);
}

TEST_CASE("pure drain at a constant rate: X linear, c constant") {
    DeterministicMarket m(4.0, RateCurve::constant(0.0));
    const auto pi = InvestmentStrategy::deterministic({});
    const auto rule = ConsumptionRule::deterministic(ConsumptionRule::Kind::McsDeterministic,
                                                     RateCurve::constant(0.0), 4.0);
    SimConfig cfg;
    cfg.steps = 400;
    cfg.paths = 2;
    cfg.record_full = true;
    const auto bundle = simulate(m, pi, rule, cfg);
    const double dt = 4.0 / cfg.steps;
    for (int k = 0; k < cfg.steps; ++k) {
        const double t = dt * k;
        CHECK(bundle.full_x[static_cast<std::size_t>(k)] ==
              doctest::Approx(1.0 - t / 4.0).epsilon(1e-12));
        CHECK(bundle.full_c[static_cast<std::size_t>(k)] ==
              doctest::Approx(0.25).epsilon(1e-12));
    }
    const auto ex = exhaustion_check(bundle);
    CHECK(ex.max_raw == doctest::Approx(dt / 4.0).epsilon(1e-10));
    CHECK(ex.max_deflated == doctest::Approx(dt / 4.0).epsilon(1e-10));
    CHECK(ex.max_budget_residual == doctest::Approx(dt / 4.0).epsilon(1e-10));
}

TEST_CASE("terminal growth factor has lognormal moments") {
    const auto m = single_asset(20.0, 0.02, 0.07, 0.2);
    const auto pi = const_pi(0.6);
    const auto rule = mcs_rule(m, pi);
    SimConfig cfg;
    cfg.steps = 128;
    cfg.paths = 100000;
    cfg.antithetic = false; // raw i.i.d. draws for the moment comparison
    cfg.master_seed = 99;
    const auto bundle = simulate(m, pi, rule, cfg);

    // log c(t_last) - log c0 is N(-v/2, v) with v = (pi sigma)^2 t_last
    const double t_last = 20.0 * (cfg.steps - 1) / cfg.steps;
    const double v = 0.12 * 0.12 * t_last;
    const int kl = bundle.n_reports() - 1;
    double mean_c = 0.0, mean_lc = 0.0, var_lc = 0.0;
    for (long p = 0; p < cfg.paths; ++p) mean_c += bundle.report_c(p, kl);
    mean_c /= static_cast<double>(cfg.paths);
    for (long p = 0; p < cfg.paths; ++p)
        mean_lc += std::log(bundle.report_c(p, kl) / bundle.c0);
    mean_lc /= static_cast<double>(cfg.paths);
    for (long p = 0; p < cfg.paths; ++p) {
        const double d = std::log(bundle.report_c(p, kl) / bundle.c0) - mean_lc;
        var_lc += d * d;
    }
    var_lc /= static_cast<double>(cfg.paths - 1);

    const double se_mean_c = bundle.c0 * std::sqrt((std::exp(v) - 1.0) / cfg.paths);
    CHECK(std::abs(mean_c - bundle.c0) <= 3.0 * se_mean_c);
    const double se_var = v * std::sqrt(2.0 / (cfg.paths - 1.0));
    CHECK(std::abs(var_lc - v) <= 3.0 * se_var);
    const double se_mean_lc = std::sqrt(v / cfg.paths);
    CHECK(std::abs(mean_lc + 0.5 * v) <= 3.0 * se_mean_lc);
}

TEST_CASE("martingale test accepts the MCS rule") {
    const auto m = single_asset(20.0, 0.02, 0.07, 0.2); // lambda 0.25
    const auto pi = const_pi(0.6);
    const auto rule = mcs_rule(m, pi);
    SimConfig cfg;
    cfg.steps = 2000;
    cfg.paths = 20000;
    cfg.master_seed = 424242;
    const auto bundle = simulate(m, pi, rule, cfg);
    const auto rep = martingale_test(bundle);
    CHECK(rep.rows.size() == 10);
    CHECK(rep.max_abs_z <= 3.0);
    REQUIRE(rep.conditional.valid);
    for (int j = 0; j < 4; ++j)
        if (rep.conditional.active[static_cast<std::size_t>(j)])
            CHECK(std::abs(rep.conditional.t_stat[static_cast<std::size_t>(j)]) <= 3.5);
}

TEST_CASE("submartingale Merton rule is detected") {
    // beta = r with lambda = 0.3 gives consumption drift 0.09/yr at gamma 1
    const auto m = single_asset(20.0, 0.02, 0.08, 0.2);
    CrraPreferences prefs{1.0, RateCurve::constant(0.02)};
    const double pi_star = merton_policy(m, prefs, 0.0).pi_star; // 1.5
    const auto rule = ConsumptionRule::deterministic(ConsumptionRule::Kind::Merton,
                                                     merton_rate_f2(m, prefs), 20.0);
    SimConfig cfg;
    cfg.steps = 1000;
    cfg.paths = 10000;
    cfg.master_seed = 7;
    const auto bundle = simulate(m, const_pi(pi_star), rule, cfg);
    const auto rep = martingale_test(bundle);
    // z at t = T/2
    bool found = false;
    for (const auto& row : rep.rows)
        if (std::abs(row.t - 10.0) < 0.3) {
            CHECK(row.z > 3.0);
            CHECK(row.drift_rate == doctest::Approx(0.09).epsilon(0.05));
            found = true;
        }
    CHECK(found);
}

TEST_CASE("zero-coefficient market has exactly zero z statistics") {
    DeterministicMarket m(4.0, RateCurve::constant(0.0));
    const auto pi = InvestmentStrategy::deterministic({});
    const auto rule = ConsumptionRule::deterministic(ConsumptionRule::Kind::McsDeterministic,
                                                     RateCurve::constant(0.0), 4.0);
    SimConfig cfg;
    cfg.steps = 64;
    cfg.paths = 128;
    const auto bundle = simulate(m, pi, rule, cfg);
    const auto rep = martingale_test(bundle);
    for (const auto& row : rep.rows) CHECK(row.z == 0.0);
}

TEST_CASE("exact and Euler schemes agree on the consumption mean") {
    const auto m = single_asset(20.0, 0.02, 0.07, 0.2);
    const auto pi = const_pi(0.6);
    const auto rule = mcs_rule(m, pi);
    SimConfig cfg;
    cfg.steps = 1000;
    cfg.paths = 20000;
    cfg.master_seed = 11;
    const auto exact = simulate(m, pi, rule, cfg);
    cfg.scheme = SimScheme::Euler;
    cfg.master_seed = 12; // independent draws for a joint-SE comparison
    const auto euler = simulate(m, pi, rule, cfg);
    const auto rep_a = martingale_test(exact);
    const auto rep_b = martingale_test(euler);
    const std::size_t mid = rep_a.rows.size() / 2;
    const double diff = std::abs(rep_a.rows[mid].mean_c - rep_b.rows[mid].mean_c);
    const double joint_se = std::sqrt(rep_a.rows[mid].se * rep_a.rows[mid].se +
                                      rep_b.rows[mid].se * rep_b.rows[mid].se);
    CHECK(diff <= 3.0 * joint_se);
}

TEST_CASE("uniqueness consistency: Merton with the martingale beta equals the MCS") {
    const auto m = single_asset(20.0, 0.02, 0.07, 0.2);
    const double gamma = 2.0;
    CrraPreferences prefs{gamma, martingale_beta_curve(m, gamma)};
    const double pi_star = merton_policy(m, prefs, 0.0).pi_star;
    const auto pi = const_pi(pi_star);

    SimConfig cfg;
    cfg.steps = 512;
    cfg.paths = 512;
    cfg.master_seed = 5150;
    const auto mcs = simulate(m, pi, mcs_rule(m, pi), cfg);
    const auto merton = simulate(
        m, pi,
        ConsumptionRule::deterministic(ConsumptionRule::Kind::Merton, merton_rate_f2(m, prefs),
                                       20.0),
        cfg);
    for (long p = 0; p < cfg.paths; ++p)
        for (int k = 0; k < mcs.n_reports(); ++k) {
            const double a = mcs.report_c(p, k), b = merton.report_c(p, k);
            CHECK(std::abs(a - b) / b <= 1e-10);
        }
}

TEST_CASE("seed determinism and thread independence") {
    const auto m = single_asset(10.0, 0.02, 0.07, 0.2);
    const auto pi = const_pi(0.5);
    const auto rule = mcs_rule(m, pi);
    SimConfig cfg;
    cfg.steps = 200;
    cfg.paths = 512;
    cfg.master_seed = 31337;
    cfg.threads = 1;
    const auto a = simulate(m, pi, rule, cfg);
    const auto b = simulate(m, pi, rule, cfg);
    CHECK(a.c == b.c);
    CHECK(a.terminal_raw == b.terminal_raw);

    cfg.threads = 4;
    const auto c = simulate(m, pi, rule, cfg);
    CHECK(a.c == c.c);
    CHECK(a.qv_logc == c.qv_logc);

    cfg.threads = 0;
    cfg.master_seed = 31338;
    const auto d = simulate(m, pi, rule, cfg);
    CHECK(a.c != d.c);
}

TEST_CASE("pathwise positivity is structural") {
    const auto m = single_asset(5.0, 0.02, 0.07, 0.25);
    const auto pi = const_pi(1.2);
    const auto rule = mcs_rule(m, pi);
    SimConfig cfg;
    cfg.steps = 300;
    cfg.paths = 64;
    cfg.record_full = true;
    const auto bundle = simulate(m, pi, rule, cfg);
    for (double v : bundle.full_x) CHECK(v > 0.0);
    for (double v : bundle.full_c) CHECK(v > 0.0);
}

TEST_CASE("exhaustion statistic halves when the step count doubles") {
    const auto m = single_asset(20.0, 0.02, 0.07, 0.2);
    const auto pi = const_pi(0.6);
    const auto rule = mcs_rule(m, pi);
    SimConfig cfg;
    cfg.steps = 1000;
    cfg.paths = 64;
    const auto coarse = exhaustion_check(simulate(m, pi, rule, cfg));
    cfg.steps = 2000;
    const auto fine = exhaustion_check(simulate(m, pi, rule, cfg));
    const double ratio = coarse.max_deflated / fine.max_deflated;
    CHECK(ratio >= 1.7);
    CHECK(ratio <= 2.3);

    cfg.steps = 10000;
    const auto ex = exhaustion_check(simulate(m, pi, rule, cfg));
    CHECK(ex.max_deflated <= 2e-4);
    CHECK(ex.max_budget_residual <= 2e-4);
}

TEST_CASE("config validation") {
    SimConfig cfg;
    cfg.paths = 7; // odd with antithetic on
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.paths = 8;
    cfg.steps = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.steps = 100;
    cfg.x0 = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("surface rule must stay positive") {
    auto m = glide_market();
    m.T = 2.0;
    m.sigma11 = VasicekMarket::zcb_volatility(m.kappa, m.sigma_r, m.T);
    const Grid2D g{2.0, -0.03, 0.09, 9, 9};
    // goes through zero well before the horizon
    auto bad = FactorSurface::sample(g, FactorSurface::Provenance::Ansatz,
                                     [](double t, double) { return 1.0 - t; });
    const auto rule = ConsumptionRule::surface(ConsumptionRule::Kind::PdeSurface, bad);
    const auto pi = InvestmentStrategy::state(
        [](double, double) -> std::array<double, 2> { return {0.0, 0.1}; });
    SimConfig cfg;
    cfg.steps = 64;
    cfg.paths = 4;
    CHECK_THROWS_AS(simulate(m, pi, rule, cfg), RuleError);
}

TEST_CASE("vasicek simulation under the PDE surface") {
    const auto m = glide_market();
    const RateCurve pi2 = RateCurve::affine(0.6, (0.1 - 0.6) / 20.0);
    const auto pi = InvestmentStrategy::state([pi2](double t, double) -> std::array<double, 2> {
        return {0.2, pi2(t)};
    });
    const Grid2D g = Grid2D::around_stationary(m.T, m.r0, m.theta, m.kappa, m.sigma_r, 201, 201);
    const auto surf = solve_mcs_pde(m, pi, g);
    const auto rule = ConsumptionRule::surface(ConsumptionRule::Kind::PdeSurface, surf);

    SimConfig cfg;
    cfg.steps = 2000;
    cfg.paths = 20000;
    cfg.master_seed = 321;
    const auto bundle = simulate(m, pi, rule, cfg);
    const auto rep = martingale_test(bundle);
    CHECK(rep.max_abs_z <= 3.5); // moderate grid, moderate path count

    const auto vols = vol_check(bundle, m, pi, surf);
    for (const auto& row : vols) {
        CHECK(row.predicted > 0.0);
        CHECK(row.rel_err <= 0.05);
    }
    // consumption variance is dominated by the stock leg here
    CHECK(vols.front().sigma_c == doctest::Approx(0.6 * 0.18).epsilon(0.15));
}

TEST_CASE("annuity hedge produces riskless consumption") {
    const auto m = glide_market();
    const Grid2D g = Grid2D::around_stationary(m.T, m.r0, m.theta, m.kappa, m.sigma_r, 201, 201);
    const VasicekMarket mc = m;
    const auto abar = FactorSurface::sample(
        g, FactorSurface::Provenance::ClosedFormAnnuity,
        [mc](double t, double r) { return vasicek_annuity_certain(mc, t, r); });
    const auto pi = hedge_strategy(m, abar);
    const auto rule = ConsumptionRule::surface(ConsumptionRule::Kind::AnnuityCertain, abar);

    SimConfig cfg;
    cfg.steps = 2000;
    cfg.paths = 512;
    cfg.master_seed = 17;
    const auto bundle = simulate(m, pi, rule, cfg);
    const auto vols = vol_check(bundle, m, pi, abar);
    for (const auto& row : vols) {
        CHECK(row.realized <= 1e-6);
        CHECK(row.predicted <= 1e-6);
        CHECK(row.sigma_c <= 1e-6);
    }
    // deterministic-rate reduction: sigma_r = 0 with a stock leg
    auto m0 = glide_market();
    m0.sigma_r = 0.0;
    m0.sigma11 = [](double, double) { return 0.02; };
    const auto pi_stock = InvestmentStrategy::state(
        [](double, double) -> std::array<double, 2> { return {0.0, 0.4}; });
    const Grid2D g0{20.0, 0.01, 0.05, 201, 9};
    const auto surf0 = solve_mcs_pde(m0, pi_stock, g0);
    const auto rule0 = ConsumptionRule::surface(ConsumptionRule::Kind::PdeSurface, surf0);
    SimConfig cfg0;
    cfg0.steps = 1000;
    cfg0.paths = 2000;
    const auto bundle0 = simulate(m0, pi_stock, rule0, cfg0);
    const auto vols0 = vol_check(bundle0, m0, pi_stock, surf0);
    const double sc = 0.4 * 0.18; // 0.072
    for (const auto& row : vols0) {
        CHECK(row.sigma_c == doctest::Approx(sc).epsilon(1e-10));
        CHECK(std::abs(row.realized - row.predicted) / row.predicted <= 0.05);
    }
}

TEST_CASE("vol_check rejects deterministic bundles") {
    const auto m = single_asset(5.0, 0.02, 0.07, 0.2);
    const auto pi = const_pi(0.5);
    const auto rule = mcs_rule(m, pi);
    SimConfig cfg;
    cfg.steps = 50;
    cfg.paths = 8;
    const auto bundle = simulate(m, pi, rule, cfg);
    const auto vm = glide_market();
    const auto surf = FactorSurface::sample(
        Grid2D{5.0, 0.0, 0.06, 5, 5}, FactorSurface::Provenance::Ansatz,
        [](double t, double) { return 5.0 - t; });
    const auto pis = InvestmentStrategy::state(
        [](double, double) -> std::array<double, 2> { return {0.0, 0.0}; });
    CHECK_THROWS_AS(vol_check(bundle, vm, pis, surf), RuleError);
}
