#pragma once

#include <optional>
#include <string>

#include "mcs/discrete.hpp"
#include "mcs/market.hpp"
#include "mcs/rule.hpp"
#include "mcs/simulator.hpp"
#include "mcs/strategies.hpp"
#include "mcs/surface.hpp"

namespace mcs {

// Parsed experiment description. One JSON file, one top-level table per
// model piece: market, strategy, preferences, rule, sim, pde, tree.
// All rates are per-year and times in years.
struct ExperimentSpec {
    std::string config_text; // raw file contents, hashed into CSV headers

    std::optional<DeterministicMarket> det_market;
    std::optional<VasicekMarket> vas_market;
    std::optional<InvestmentStrategy> strategy;
    bool strategy_is_hedge = false; // simulations re-derive it from the rule surface
    std::optional<CrraPreferences> preferences;

    std::string rule_kind;    // "mcs" | "merton" | "annuity-certain" | "pde-surface"
    SimConfig sim;
    bool has_sim = false;

    Grid2D pde_grid{};
    bool has_pde_grid = false;
    std::string pde_solve = "mcs"; // "mcs" | "annuity"

    std::optional<ScenarioTree> tree;

    bool is_vasicek() const { return vas_market.has_value(); }

    // Builds the consumption rule named by rule_kind; PDE-backed rules solve
    // on the configured (or default) grid.
    ConsumptionRule build_rule() const;
    Grid2D default_grid(int nt, int nr) const;
};

ExperimentSpec load_experiment(const std::string& path);
ExperimentSpec parse_experiment(const std::string& json_text);

std::uint64_t fnv1a_hash(const std::string& text);

} // namespace mcs
