#include "mcs/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mcs/errors.hpp"
#include "mcs/pde.hpp"
#include "mcs/vasicek_annuity.hpp"

namespace mcs {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

double need_number(const json& j, const std::string& ctx, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) fail(ctx, std::string("missing number '") + key + "'");
    return j[key].get<double>();
}

double opt_number(const json& j, const char* key, double fallback) {
    return (j.contains(key) && j[key].is_number()) ? j[key].get<double>() : fallback;
}

RateCurve parse_curve(const json& j, const std::string& ctx) {
    if (j.is_number()) return RateCurve::constant(j.get<double>());
    if (!j.is_object() || !j.contains("kind")) fail(ctx, "curve spec needs a 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "constant") return RateCurve::constant(need_number(j, ctx, "value"));
    if (kind == "affine")
        return RateCurve::affine(need_number(j, ctx, "intercept"), need_number(j, ctx, "slope"));
    if (kind == "piecewise") {
        if (!j.contains("breakpoints") || !j.contains("values"))
            fail(ctx, "piecewise curve needs 'breakpoints' and 'values'");
        return RateCurve::piecewise_constant(j["breakpoints"].get<std::vector<double>>(),
                                             j["values"].get<std::vector<double>>());
    }
    if (kind == "tabulated") {
        if (!j.contains("times") || !j.contains("values"))
            fail(ctx, "tabulated curve needs 'times' and 'values'");
        return RateCurve::tabulated(j["times"].get<std::vector<double>>(),
                                    j["values"].get<std::vector<double>>());
    }
    fail(ctx, "unknown curve kind '" + kind + "'");
}

std::function<double(double, double)> parse_vol_fn(const json& j, const std::string& ctx,
                                                   double kappa, double sigma_r, double T) {
    if (j.is_number()) {
        const double v = j.get<double>();
        return [v](double, double) { return v; };
    }
    if (!j.is_object() || !j.contains("kind")) fail(ctx, "volatility spec needs a 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "constant") {
        const double v = need_number(j, ctx, "value");
        return [v](double, double) { return v; };
    }
    if (kind == "zcb") {
        const double maturity = opt_number(j, "maturity", T);
        return VasicekMarket::zcb_volatility(kappa, sigma_r, maturity);
    }
    fail(ctx, "unknown volatility kind '" + kind + "'");
}

void parse_market(const json& root, ExperimentSpec& spec) {
    if (!root.contains("market")) return;
    const json& m = root["market"];
    const std::string type = m.value("type", "deterministic");
    const double T = need_number(m, "market", "T");
    if (type == "deterministic") {
        RateCurve r = parse_curve(m.at("r"), "market.r");
        std::vector<RateCurve> alpha;
        std::vector<std::vector<RateCurve>> sigma;
        if (m.contains("assets")) {
            for (const auto& a : m["assets"]) {
                alpha.push_back(parse_curve(a.at("alpha"), "market.assets.alpha"));
                std::vector<RateCurve> row;
                for (const auto& s : a.at("sigma")) row.push_back(parse_curve(s, "market.assets.sigma"));
                sigma.push_back(std::move(row));
            }
        }
        spec.det_market.emplace(T, std::move(r), std::move(alpha), std::move(sigma));
    } else if (type == "vasicek") {
        VasicekMarket v;
        v.T = T;
        v.kappa = need_number(m, "market", "kappa");
        v.theta = need_number(m, "market", "theta");
        v.sigma_r = need_number(m, "market", "sigma_r");
        v.r0 = need_number(m, "market", "r0");
        v.lambda1 = opt_number(m, "lambda1", 0.0);
        v.lambda2 = opt_number(m, "lambda2", 0.0);
        v.sigma22 = need_number(m, "market", "sigma22");
        v.sigma11 = m.contains("sigma11")
                        ? parse_vol_fn(m["sigma11"], "market.sigma11", v.kappa, v.sigma_r, T)
                        : VasicekMarket::zcb_volatility(v.kappa, v.sigma_r, T);
        if (m.contains("sigma21")) {
            v.sigma21 = parse_vol_fn(m["sigma21"], "market.sigma21", v.kappa, v.sigma_r, T);
        } else {
            v.sigma21 = [](double, double) { return 0.0; };
        }
        v.validate();
        spec.vas_market = std::move(v);
    } else {
        fail("market.type", "unknown market type '" + type + "'");
    }
}

void parse_strategy(const json& root, ExperimentSpec& spec) {
    if (!root.contains("strategy")) return;
    const json& s = root["strategy"];
    const std::string type = s.value("type", "deterministic");
    if (type == "deterministic") {
        std::vector<RateCurve> pi;
        if (s.contains("pi"))
            for (const auto& c : s["pi"]) pi.push_back(parse_curve(c, "strategy.pi"));
        spec.strategy = InvestmentStrategy::deterministic(std::move(pi));
    } else if (type == "vasicek") {
        RateCurve p1 = s.contains("pi1") ? parse_curve(s["pi1"], "strategy.pi1")
                                         : RateCurve::constant(0.0);
        RateCurve p2 = s.contains("pi2") ? parse_curve(s["pi2"], "strategy.pi2")
                                         : RateCurve::constant(0.0);
        spec.strategy = InvestmentStrategy::state(
            [p1, p2](double t, double) -> std::array<double, 2> { return {p1(t), p2(t)}; });
    } else if (type == "hedge") {
        if (!spec.vas_market) fail("strategy", "hedge strategy needs a vasicek market");
        spec.strategy = hedge_strategy_closed_form(*spec.vas_market);
        spec.strategy_is_hedge = true;
    } else {
        fail("strategy.type", "unknown strategy type '" + type + "'");
    }
}

void parse_tree_node(const json& jn, ScenarioTree& tree, int parent) {
    if (!jn.contains("children")) return;
    for (const auto& c : jn["children"]) {
        const int id = tree.add_child(parent, need_number(c, "tree.node", "ret"),
                                      need_number(c, "tree.node", "p"));
        parse_tree_node(c, tree, id);
    }
}

} // namespace

std::uint64_t fnv1a_hash(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

ExperimentSpec parse_experiment(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    ExperimentSpec spec;
    spec.config_text = json_text;
    parse_market(root, spec);
    parse_strategy(root, spec);

    if (root.contains("preferences")) {
        const json& p = root["preferences"];
        CrraPreferences prefs;
        prefs.gamma = need_number(p, "preferences", "gamma");
        if (p.contains("beta")) prefs.beta = parse_curve(p["beta"], "preferences.beta");
        spec.preferences = prefs;
    }

    spec.rule_kind = root.value("rule", json::object()).value("kind", "mcs");

    if (root.contains("sim")) {
        const json& s = root["sim"];
        spec.sim.x0 = opt_number(s, "x0", 1.0);
        spec.sim.steps = static_cast<int>(opt_number(s, "steps", 1000));
        spec.sim.paths = static_cast<long>(opt_number(s, "paths", 10000));
        if (s.contains("master_seed")) spec.sim.master_seed = s["master_seed"].get<std::uint64_t>();
        const std::string scheme = s.value("scheme", "exact");
        if (scheme == "exact") spec.sim.scheme = SimScheme::ExactLognormal;
        else if (scheme == "euler") spec.sim.scheme = SimScheme::Euler;
        else fail("sim.scheme", "unknown scheme '" + scheme + "'");
        spec.sim.antithetic = s.value("antithetic", true);
        spec.sim.threads = static_cast<int>(opt_number(s, "threads", 0));
        spec.sim.record_full = s.value("record_full", false);
        if (s.contains("report_times"))
            spec.sim.report_times = s["report_times"].get<std::vector<double>>();
        spec.has_sim = true;
    }

    if (root.contains("pde")) {
        const json& p = root["pde"];
        const double T = spec.vas_market ? spec.vas_market->T
                                         : (spec.det_market ? spec.det_market->horizon() : 0.0);
        const int nt = static_cast<int>(opt_number(p, "nt", 400));
        const int nr = static_cast<int>(opt_number(p, "nr", 400));
        if (p.contains("r_min") && p.contains("r_max")) {
            spec.pde_grid = Grid2D{T, p["r_min"].get<double>(), p["r_max"].get<double>(), nt, nr};
            spec.pde_grid.validate();
        } else if (spec.vas_market) {
            spec.pde_grid = spec.default_grid(nt, nr);
        } else {
            fail("pde", "grid needs r_min/r_max or a vasicek market");
        }
        spec.pde_solve = p.value("solve", "mcs");
        spec.has_pde_grid = true;
    }

    if (root.contains("tree")) {
        const json& t = root["tree"];
        ScenarioTree tree;
        if (!t.contains("root")) fail("tree", "needs a 'root' node");
        parse_tree_node(t["root"], tree, tree.root());
        tree.validate();
        spec.tree = std::move(tree);
    }
    return spec;
}

ExperimentSpec load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment(ss.str());
}

Grid2D ExperimentSpec::default_grid(int nt, int nr) const {
    if (!vas_market) throw ConfigError("default grid needs a vasicek market");
    const auto& m = *vas_market;
    return Grid2D::around_stationary(m.T, m.r0, m.theta, m.kappa, m.sigma_r, nt, nr);
}

ConsumptionRule ExperimentSpec::build_rule() const {
    if (rule_kind == "mcs") {
        if (vas_market) {
            if (!strategy) throw ConfigError("pde-backed mcs rule needs a strategy");
            const Grid2D g = has_pde_grid ? pde_grid : default_grid(400, 400);
            return ConsumptionRule::surface(ConsumptionRule::Kind::PdeSurface,
                                            solve_mcs_pde(*vas_market, *strategy, g));
        }
        if (!det_market || !strategy) throw ConfigError("mcs rule needs a market and strategy");
        return ConsumptionRule::deterministic(ConsumptionRule::Kind::McsDeterministic,
                                              mcs_rate_curve(*det_market, *strategy),
                                              det_market->horizon());
    }
    if (rule_kind == "merton") {
        if (!det_market || !preferences)
            throw ConfigError("merton rule needs a deterministic market and preferences");
        return ConsumptionRule::deterministic(ConsumptionRule::Kind::Merton,
                                              merton_rate_f2(*det_market, *preferences),
                                              det_market->horizon());
    }
    if (rule_kind == "annuity-certain") {
        if (vas_market) {
            const Grid2D g = has_pde_grid ? pde_grid : default_grid(400, 400);
            const VasicekMarket m = *vas_market;
            auto sampled = FactorSurface::sample(
                g, FactorSurface::Provenance::ClosedFormAnnuity,
                [m](double t, double r) { return vasicek_annuity_certain(m, t, r); });
            return ConsumptionRule::surface(ConsumptionRule::Kind::AnnuityCertain,
                                            std::move(sampled));
        }
        if (!det_market) throw ConfigError("annuity-certain rule needs a market");
        return ConsumptionRule::deterministic(ConsumptionRule::Kind::AnnuityCertain,
                                              det_market->rate_curve(), det_market->horizon());
    }
    if (rule_kind == "pde-surface") {
        if (!vas_market || !strategy)
            throw ConfigError("pde-surface rule needs a vasicek market and strategy");
        const Grid2D g = has_pde_grid ? pde_grid : default_grid(400, 400);
        return ConsumptionRule::surface(ConsumptionRule::Kind::PdeSurface,
                                        solve_mcs_pde(*vas_market, *strategy, g));
    }
    throw ConfigError("unknown rule kind '" + rule_kind + "'");
}

} // namespace mcs
