#include "mcs/strategies.hpp"

#include <cmath>

#include "mcs/annuity.hpp"
#include "mcs/errors.hpp"

namespace mcs {

InvestmentStrategy InvestmentStrategy::deterministic(std::vector<RateCurve> pi) {
    InvestmentStrategy s;
    s.regime_ = Regime::Deterministic;
    s.pi_det_ = std::move(pi);
    return s;
}

InvestmentStrategy InvestmentStrategy::state(
    std::function<std::array<double, 2>(double, double)> pi) {
    InvestmentStrategy s;
    s.regime_ = Regime::State;
    s.pi_state_ = std::move(pi);
    return s;
}

std::vector<double> InvestmentStrategy::fractions(double t) const {
    if (regime_ != Regime::Deterministic)
        throw Error("deterministic fractions requested from a state-dependent strategy");
    std::vector<double> out;
    out.reserve(pi_det_.size());
    for (const auto& c : pi_det_) out.push_back(c(t));
    return out;
}

std::array<double, 2> InvestmentStrategy::fractions(double t, double r) const {
    if (regime_ != Regime::State)
        throw Error("state fractions requested from a deterministic strategy");
    return pi_state_(t, r);
}

double mcs_rate_f3(const DeterministicMarket& market, const InvestmentStrategy& pi, double t) {
    const double r = market.rate(t);
    const auto alpha = market.drift(t);
    const auto w = pi.fractions(t);
    if (w.size() != alpha.size())
        throw ConfigError("strategy dimension does not match market asset count");
    double f = r;
    for (std::size_t i = 0; i < w.size(); ++i) f += w[i] * (alpha[i] - r);
    return f;
}

RateCurve mcs_rate_curve(const DeterministicMarket& market, const InvestmentStrategy& pi) {
    // With constant fractions and drifts, f3 = (1 - sum pi) r(t) + sum pi alpha
    // stays inside the named families through curve algebra; otherwise fall
    // back to a callable.
    bool pi_alpha_constant = pi.regime() == InvestmentStrategy::Regime::Deterministic;
    for (int i = 0; i < market.asset_count() && pi_alpha_constant; ++i)
        pi_alpha_constant = pi.component(i).is_constant() && market.drift_curve(i).is_constant();
    if (pi_alpha_constant) {
        double sum_pi = 0.0, sum_pi_alpha = 0.0;
        for (int i = 0; i < market.asset_count(); ++i) {
            sum_pi += pi.component(i).constant_value();
            sum_pi_alpha += pi.component(i).constant_value() *
                            market.drift_curve(i).constant_value();
        }
        return (1.0 - sum_pi) * market.rate_curve() + RateCurve::constant(sum_pi_alpha);
    }
    return RateCurve::callable([market, pi](double t) { return mcs_rate_f3(market, pi, t); });
}

double mcs_factor(const DeterministicMarket& market, const InvestmentStrategy& pi, double t) {
    return annuity_factor(mcs_rate_curve(market, pi), t, market.horizon());
}

RateCurve merton_rate_f1(const DeterministicMarket& market, const CrraPreferences& prefs) {
    if (prefs.gamma <= 0.0) throw PreferenceError("gamma must be positive");
    // f1 = (beta - (1-gamma) r)/gamma
    return (1.0 / prefs.gamma) * prefs.beta + (-(1.0 - prefs.gamma) / prefs.gamma) *
                                                  market.rate_curve();
}

namespace {

double constant_lambda_single_asset(const DeterministicMarket& market) {
    if (market.asset_count() != 1)
        throw ConfigError("Merton policy requires a single risky asset (or none)");
    if (!market.volatility_curve(0, 0).is_constant() || !market.drift_curve(0).is_constant() ||
        !market.rate_curve().is_constant())
        throw ConfigError("Merton policy requires constant lambda and sigma");
    return market.lambda_of(0.0)[0];
}

} // namespace

RateCurve merton_rate_f2(const DeterministicMarket& market, const CrraPreferences& prefs) {
    if (prefs.gamma <= 0.0) throw PreferenceError("gamma must be positive");
    if (market.asset_count() == 0) return merton_rate_f1(market, prefs);
    const double lambda = constant_lambda_single_asset(market);
    const double adj = (prefs.gamma - 1.0) * lambda * lambda / (2.0 * prefs.gamma * prefs.gamma);
    return merton_rate_f1(market, prefs).shifted(adj);
}

MertonPolicy merton_policy(const DeterministicMarket& market, const CrraPreferences& prefs,
                           double t) {
    if (prefs.gamma <= 0.0) throw PreferenceError("gamma must be positive");
    MertonPolicy out;
    if (market.asset_count() == 0) {
        out.pi_star = 0.0;
        out.factor = annuity_factor(merton_rate_f1(market, prefs), t, market.horizon());
        return out;
    }
    const double lambda = constant_lambda_single_asset(market);
    const double sigma = market.volatility_curve(0, 0).constant_value();
    out.pi_star = lambda / (sigma * prefs.gamma);
    out.factor = annuity_factor(merton_rate_f2(market, prefs), t, market.horizon());
    return out;
}

double martingale_beta(const DeterministicMarket& market, double gamma, double t) {
    if (gamma <= 0.0) throw PreferenceError("gamma must be positive");
    const auto lambda = market.lambda_of(t);
    double norm2 = 0.0;
    for (double l : lambda) norm2 += l * l;
    return market.rate(t) + norm2 * (gamma + 1.0) / (2.0 * gamma);
}

RateCurve martingale_beta_curve(const DeterministicMarket& market, double gamma) {
    if (gamma <= 0.0) throw PreferenceError("gamma must be positive");
    bool all_constant = market.rate_curve().is_constant();
    for (int i = 0; i < market.asset_count() && all_constant; ++i) {
        all_constant = market.drift_curve(i).is_constant();
        for (int j = 0; j < market.asset_count() && all_constant; ++j)
            all_constant = market.volatility_curve(i, j).is_constant();
    }
    if (all_constant) return RateCurve::constant(martingale_beta(market, gamma, 0.0));
    return RateCurve::callable(
        [market, gamma](double t) { return martingale_beta(market, gamma, t); });
}

double drift_residual(const RateCurve& f, const DeterministicMarket& market,
                      const InvestmentStrategy& pi, double t) {
    return mcs_rate_f3(market, pi, t) - f(t);
}

DriftVol merton_consumption_drift_vol(const CrraPreferences& prefs,
                                      const DeterministicMarket& market, double t) {
    if (prefs.gamma <= 0.0) throw PreferenceError("gamma must be positive");
    const auto lambda = market.lambda_of(t);
    double norm2 = 0.0;
    for (double l : lambda) norm2 += l * l;
    DriftVol out;
    out.drift = (market.rate(t) - prefs.beta(t) + norm2 * (prefs.gamma + 1.0) / (2.0 * prefs.gamma)) /
                prefs.gamma;
    out.vol = std::sqrt(norm2) / prefs.gamma;
    return out;
}

} // namespace mcs
