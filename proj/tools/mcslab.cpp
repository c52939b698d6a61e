#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcs/annuity.hpp"
#include "mcs/config.hpp"
#include "mcs/csv.hpp"
#include "mcs/errors.hpp"
#include "mcs/pde.hpp"
#include "mcs/simulator.hpp"
#include "mcs/vasicek_annuity.hpp"

namespace fs = std::filesystem;
using namespace mcs;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<long> paths;
    std::optional<int> steps;
    int refine = 0;
    bool assert_martingale = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "experiment config file")->required();
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "override sim.master_seed");
    cmd->add_option("--paths", o.paths, "override sim.paths");
    cmd->add_option("--steps", o.steps, "override sim.steps");
    cmd->add_option("--refine", o.refine, "refinement levels for convergence studies");
    cmd->add_flag("--assert-martingale", o.assert_martingale,
                  "exit 4 if any report |z| > 3");
}

struct Loaded {
    ExperimentSpec spec;
    std::uint64_t hash = 0;
};

Loaded load(const CommonOpts& o) {
    Loaded l{load_experiment(o.config_path), 0};
    l.hash = fnv1a_hash(l.spec.config_text);
    if (o.seed) l.spec.sim.master_seed = *o.seed;
    if (o.paths) l.spec.sim.paths = *o.paths;
    if (o.steps) l.spec.sim.steps = *o.steps;
    fs::create_directories(o.out_dir);
    return l;
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

int cmd_factor(const CommonOpts& o) {
    Loaded l = load(o);
    const auto& spec = l.spec;
    if (!spec.det_market) throw ConfigError("factor command needs a deterministic market");
    const ConsumptionRule rule = spec.build_rule();
    const double T = spec.det_market->horizon();
    const int n = 200;
    CsvWriter csv(join(o.out_dir, "factor.csv"), l.hash, spec.sim.master_seed, {"t", "factor"});
    for (int k = 0; k <= n; ++k) {
        const double t = T * k / n;
        csv.row({t, rule.factor(t)});
    }
    return 0;
}

int cmd_annuity(const CommonOpts& o) {
    Loaded l = load(o);
    const auto& spec = l.spec;
    const int n = 200;
    CsvWriter csv(join(o.out_dir, "annuity.csv"), l.hash, spec.sim.master_seed, {"t", "factor"});
    if (spec.vas_market) {
        const auto& m = *spec.vas_market;
        for (int k = 0; k <= n; ++k) {
            const double t = m.T * k / n;
            csv.row({t, vasicek_annuity_certain(m, t, m.r0)});
        }
    } else if (spec.det_market) {
        const double T = spec.det_market->horizon();
        for (int k = 0; k <= n; ++k) {
            const double t = T * k / n;
            csv.row({t, annuity_factor(spec.det_market->rate_curve(), t, T)});
        }
    } else {
        throw ConfigError("annuity command needs a market");
    }
    return 0;
}

int write_reports(const std::string& out_dir, const Loaded& l, const PathBundle& bundle,
                  bool assert_martingale) {
    const auto& spec = l.spec;
    const MartingaleReport rep = martingale_test(bundle);
    {
        CsvWriter csv(join(out_dir, "report.csv"), l.hash, spec.sim.master_seed,
                      {"t", "mean_c", "se", "z", "drift_rate"});
        for (const auto& row : rep.rows)
            csv.row({row.t, row.mean_c, row.se, row.z, row.drift_rate});
    }
    {
        const ExhaustionStats ex = exhaustion_check(bundle);
        CsvWriter csv(join(out_dir, "exhaustion.csv"), l.hash, spec.sim.master_seed,
                      {"max_raw", "max_deflated", "max_budget_residual"});
        csv.row({ex.max_raw, ex.max_deflated, ex.max_budget_residual});
    }
    {
        const long write_paths = std::min<long>(bundle.paths, 1000);
        std::vector<std::string> cols = {"path_id", "t", "X", "c"};
        if (bundle.stochastic_rate) cols.push_back("r");
        CsvWriter csv(join(out_dir, "paths.csv"), l.hash, spec.sim.master_seed, cols);
        for (long p = 0; p < write_paths; ++p)
            for (int k = 0; k < bundle.n_reports(); ++k) {
                const std::size_t cell =
                    static_cast<std::size_t>(p) * static_cast<std::size_t>(bundle.n_reports()) +
                    static_cast<std::size_t>(k);
                std::vector<double> row = {static_cast<double>(p), bundle.report_times[
                                               static_cast<std::size_t>(k)],
                                           bundle.x[cell], bundle.c[cell]};
                if (bundle.stochastic_rate) row.push_back(bundle.r[cell]);
                csv.row(row);
            }
    }
    if (assert_martingale && rep.max_abs_z > 3.0) {
        std::cerr << "martingale test rejected: max |z| = " << rep.max_abs_z << "\n";
        return 4;
    }
    return 0;
}

int cmd_simulate(const CommonOpts& o) {
    Loaded l = load(o);
    const auto& spec = l.spec;
    if (!spec.strategy) throw ConfigError("simulate needs a strategy");
    const ConsumptionRule rule = spec.build_rule();
    PathBundle bundle;
    if (spec.vas_market) {
        // hedge strategies path-step off the rule surface (interpolation)
        // rather than re-quadrating the closed form every step
        const InvestmentStrategy pi =
            (spec.strategy_is_hedge && rule.is_surface())
                ? hedge_strategy(*spec.vas_market, rule.surf())
                : *spec.strategy;
        bundle = simulate(*spec.vas_market, pi, rule, spec.sim);
    } else if (spec.det_market) {
        bundle = simulate(*spec.det_market, *spec.strategy, rule, spec.sim);
    } else {
        throw ConfigError("simulate needs a market");
    }
    return write_reports(o.out_dir, l, bundle, o.assert_martingale);
}

// errors vs the closed-form annuity certain on a ladder of doubled grids
// (meaningful for the annuity solve and hedge configurations)
void write_pde_convergence(const CommonOpts& o, const Loaded& l, const Grid2D& grid,
                           const std::function<FactorSurface(const Grid2D&)>& solve_on) {
    const VasicekAnnuityEvaluator abar(*l.spec.vas_market);
    CsvWriter csv(join(o.out_dir, "convergence.csv"), l.hash, l.spec.sim.master_seed,
                  {"level", "nt", "nr", "max_rel_error", "ratio"});
    std::vector<Grid2D> ladder;
    int int_t = grid.nt - 1, int_r = grid.nr - 1;
    for (int lev = 0; lev <= o.refine; ++lev) {
        ladder.push_back(Grid2D{grid.T, grid.r_min, grid.r_max, int_t + 1, int_r + 1});
        int_t = std::max(2, int_t / 2);
        int_r = std::max(2, int_r / 2);
    }
    std::reverse(ladder.begin(), ladder.end());
    double prev_err = 0.0;
    for (std::size_t lev = 0; lev < ladder.size(); ++lev) {
        const Grid2D& g = ladder[lev];
        const FactorSurface s = solve_on(g);
        double err = 0.0;
        for (int it = 0; it < g.nt - 1; ++it)
            for (int jr = 0; jr < g.nr; ++jr) {
                const double ref = abar.value(g.t(it), g.r(jr));
                err = std::max(err, std::abs(s.at(it, jr) - ref) / ref);
            }
        csv.row({static_cast<double>(lev), static_cast<double>(g.nt),
                 static_cast<double>(g.nr), err, lev > 0 ? prev_err / err : 0.0});
        prev_err = err;
    }
}

int cmd_pde(const CommonOpts& o) {
    Loaded l = load(o);
    const auto& spec = l.spec;
    if (!spec.vas_market) throw ConfigError("pde command needs a vasicek market");
    const auto& m = *spec.vas_market;
    Grid2D grid = spec.has_pde_grid ? spec.pde_grid : spec.default_grid(400, 400);

    auto solve_on = [&](const Grid2D& g) {
        if (spec.pde_solve == "annuity") return solve_annuity_pde(m, g);
        if (!spec.strategy) throw ConfigError("mcs pde solve needs a strategy");
        return solve_mcs_pde(m, *spec.strategy, g);
    };

    const FactorSurface surf = solve_on(grid);
    {
        CsvWriter csv(join(o.out_dir, "surface.csv"), l.hash, spec.sim.master_seed,
                      {"t", "r", "a"});
        for (int it = 0; it < grid.nt; ++it)
            for (int jr = 0; jr < grid.nr; ++jr)
                csv.row({grid.t(it), grid.r(jr), surf.at(it, jr)});
    }

    if (o.refine > 0) write_pde_convergence(o, l, grid, solve_on);
    return 0;
}

int cmd_discrete(const CommonOpts& o) {
    Loaded l = load(o);
    const auto& spec = l.spec;
    if (!spec.tree) throw ConfigError("discrete command needs a tree");
    const ScenarioTree& tree = *spec.tree;
    const auto rec = solve_recursion(tree);
    const auto cand = candidate_factor(tree);
    const auto ev = evaluate_tree(tree, rec, 1.0L);
    {
        CsvWriter csv(join(o.out_dir, "discrete.csv"), l.hash, spec.sim.master_seed,
                      {"node_id", "period", "ret", "prob", "a", "a_candidate", "C", "X"});
        for (std::size_t i = 0; i < tree.size(); ++i) {
            const auto& n = tree.node(static_cast<int>(i));
            csv.row({static_cast<double>(i), static_cast<double>(n.period), n.ret, n.prob,
                     static_cast<double>(rec.a[i]), static_cast<double>(cand.a[i]),
                     static_cast<double>(ev.consumption[i]), static_cast<double>(ev.wealth[i])});
        }
    }
    {
        const auto v_rec = martingale_verify(tree, rec);
        const auto v_cand = martingale_verify(tree, cand);
        CsvWriter csv(join(o.out_dir, "violations.csv"), l.hash, spec.sim.master_seed,
                      {"factors", "max_violation", "max_leaf_wealth"});
        csv.mixed_row({"recursion", CsvWriter::num(static_cast<double>(v_rec.max_violation)),
                       CsvWriter::num(static_cast<double>(v_rec.max_leaf_wealth))});
        csv.mixed_row({"candidate", CsvWriter::num(static_cast<double>(v_cand.max_violation)),
                       CsvWriter::num(static_cast<double>(v_cand.max_leaf_wealth))});
    }
    return 0;
}

int cmd_compare_merton(const CommonOpts& o) {
    Loaded l = load(o);
    const auto& spec = l.spec;
    if (!spec.det_market || !spec.preferences)
        throw ConfigError("compare-merton needs a deterministic market and preferences");
    const auto& market = *spec.det_market;
    const auto& prefs = *spec.preferences;
    const auto policy0 = merton_policy(market, prefs, 0.0);
    const InvestmentStrategy pi_star = InvestmentStrategy::deterministic(
        {RateCurve::constant(policy0.pi_star)});
    const RateCurve f1 = merton_rate_f1(market, prefs);
    const RateCurve f2 = merton_rate_f2(market, prefs);
    const RateCurve f3 = mcs_rate_curve(market, pi_star);
    const double T = market.horizon();
    const int n = 200;
    CsvWriter csv(join(o.out_dir, "compare_merton.csv"), l.hash, spec.sim.master_seed,
                  {"t", "pi_star", "f1", "f2", "f3", "B_f1", "B_f2", "B_f3"});
    for (int k = 0; k <= n; ++k) {
        const double t = T * k / n;
        csv.row({t, policy0.pi_star, f1(t), f2(t), f3(t), annuity_factor(f1, t, T),
                 annuity_factor(f2, t, T), annuity_factor(f3, t, T)});
    }
    return 0;
}

int cmd_convergence(const CommonOpts& o) {
    Loaded l = load(o);
    ExperimentSpec spec = l.spec;
    if (spec.det_market && spec.strategy) {
        // exhaustion statistics under step doubling
        const ConsumptionRule rule = spec.build_rule();
        const int levels = std::max(1, o.refine);
        CsvWriter csv(join(o.out_dir, "sim_convergence.csv"), l.hash, spec.sim.master_seed,
                      {"steps", "max_deflated", "max_budget_residual", "ratio"});
        SimConfig cfg = spec.sim;
        double prev = 0.0;
        for (int lev = 0; lev < levels; ++lev) {
            const PathBundle bundle = simulate(*spec.det_market, *spec.strategy, rule, cfg);
            const ExhaustionStats ex = exhaustion_check(bundle);
            csv.row({static_cast<double>(cfg.steps), ex.max_deflated, ex.max_budget_residual,
                     lev > 0 ? prev / ex.max_deflated : 0.0});
            prev = ex.max_deflated;
            cfg.steps *= 2;
        }
        return 0;
    }
    if (spec.vas_market) {
        // PDE refinement table on the configured grid
        const Grid2D grid = spec.has_pde_grid ? spec.pde_grid : spec.default_grid(401, 401);
        auto solve_on = [&](const Grid2D& g) {
            if (spec.pde_solve == "annuity") return solve_annuity_pde(*spec.vas_market, g);
            if (!spec.strategy) throw ConfigError("mcs pde solve needs a strategy");
            return solve_mcs_pde(*spec.vas_market, *spec.strategy, g);
        };
        CommonOpts opts = o;
        if (opts.refine <= 0) opts.refine = 3;
        write_pde_convergence(opts, l, grid, solve_on);
        return 0;
    }
    throw ConfigError("convergence needs a market (plus a strategy for simulations)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"martingale consumption laboratory"};
    app.require_subcommand(1);

    CommonOpts opts;
    int (*runner)(const CommonOpts&) = nullptr;

    auto wire = [&](const char* name, const char* desc, int (*fn)(const CommonOpts&)) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        add_common(cmd, opts);
        cmd->callback([&runner, fn]() { runner = fn; });
        return cmd;
    };

    wire("factor", "tabulate the wealth-to-consumption factor", &cmd_factor);
    wire("simulate", "Monte Carlo paths and martingale diagnostics", &cmd_simulate);
    wire("pde", "solve the factor PDE; --refine adds a convergence table", &cmd_pde);
    wire("annuity", "tabulate the annuity factor", &cmd_annuity);
    wire("discrete", "scenario-tree backward induction", &cmd_discrete);
    wire("compare-merton", "CRRA-optimal vs martingale factor curves", &cmd_compare_merton);
    wire("convergence", "exhaustion statistics under step doubling", &cmd_convergence);

    CLI11_PARSE(app, argc, argv);

    try {
        return runner ? runner(opts) : 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
