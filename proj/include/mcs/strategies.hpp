#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "mcs/curves.hpp"
#include "mcs/market.hpp"

namespace mcs {

// Proportional investment strategy. Deterministic regime: one curve of wealth
// fractions per asset. State regime (Vasicek market): a (t, r) -> (pi1, pi2)
// map. Shorting is allowed; no positivity constraint.
class InvestmentStrategy {
public:
    enum class Regime { Deterministic, State };

    static InvestmentStrategy deterministic(std::vector<RateCurve> pi);
    static InvestmentStrategy state(std::function<std::array<double, 2>(double, double)> pi);

    Regime regime() const { return regime_; }
    int asset_count() const { return static_cast<int>(pi_det_.size()); }

    std::vector<double> fractions(double t) const;            // deterministic regime
    std::array<double, 2> fractions(double t, double r) const; // state regime
    const RateCurve& component(int i) const { return pi_det_[static_cast<std::size_t>(i)]; }

private:
    Regime regime_ = Regime::Deterministic;
    std::vector<RateCurve> pi_det_;
    std::function<std::array<double, 2>(double, double)> pi_state_;
};

// CRRA preferences: relative risk aversion gamma > 0 and a time-preference
// rate curve beta(t).
struct CrraPreferences {
    double gamma = 1.0;
    RateCurve beta = RateCurve::constant(0.0);
};

// Expected instantaneous investment return under (market, pi):
//   f3(t) = r(t) + pi(t) . (alpha(t) - 1 r(t))
double mcs_rate_f3(const DeterministicMarket& market, const InvestmentStrategy& pi, double t);

// f3 as a curve; stays in the named families when market and strategy
// coefficients allow, so downstream annuity factors keep exact antiderivatives.
RateCurve mcs_rate_curve(const DeterministicMarket& market, const InvestmentStrategy& pi);

// Wealth-to-consumption factor B_{f3}(t) of the martingale consumption
// strategy under deterministic coefficients.
double mcs_factor(const DeterministicMarket& market, const InvestmentStrategy& pi, double t);

// Merton rates: f1(t) = (beta(t) - (1-gamma) r(t))/gamma and
// f2(t) = f1(t) + (gamma-1) lambda^2 / (2 gamma^2).
RateCurve merton_rate_f1(const DeterministicMarket& market, const CrraPreferences& prefs);
RateCurve merton_rate_f2(const DeterministicMarket& market, const CrraPreferences& prefs);

struct MertonPolicy {
    double pi_star = 0.0; // constant fraction lambda / (sigma gamma); 0 with no risky asset
    double factor = 0.0;  // B_{f2}(t), or B_{f1}(t) with no risky asset
};

// CRRA-optimal policy in the single-asset (or no-asset) market with constant
// lambda and sigma. Throws PreferenceError for gamma <= 0.
MertonPolicy merton_policy(const DeterministicMarket& market, const CrraPreferences& prefs,
                           double t);

// Time preference making the CRRA-optimal consumption a martingale:
//   beta(t) = r(t) + ||lambda(t)||^2 (gamma+1)/(2 gamma)
double martingale_beta(const DeterministicMarket& market, double gamma, double t);
RateCurve martingale_beta_curve(const DeterministicMarket& market, double gamma);

// Drift of c under the deterministic factor Z = B_f:
//   r(t) + pi(t) sigma(t) lambda(t) - f(t);  zero exactly when f = f3.
double drift_residual(const RateCurve& f, const DeterministicMarket& market,
                      const InvestmentStrategy& pi, double t);

struct DriftVol {
    double drift = 0.0; // (r - beta + ||lambda||^2 (gamma+1)/(2 gamma)) / gamma
    double vol = 0.0;   // ||lambda|| / gamma
};

// Drift and volatility rates of the CRRA-optimal consumption process.
DriftVol merton_consumption_drift_vol(const CrraPreferences& prefs,
                                      const DeterministicMarket& market, double t);

} // namespace mcs
