#include "mcs/rule.hpp"

#include "mcs/errors.hpp"

namespace mcs {

ConsumptionRule ConsumptionRule::deterministic(Kind kind, RateCurve f, double horizon) {
    if (horizon <= 0.0) throw RuleError("horizon must be positive");
    ConsumptionRule r;
    r.kind_ = kind;
    r.T_ = horizon;
    r.f_ = std::move(f);
    r.has_curve_ = true;
    return r;
}

ConsumptionRule ConsumptionRule::surface(Kind kind, FactorSurface surf) {
    ConsumptionRule r;
    r.kind_ = kind;
    r.T_ = surf.grid().T;
    r.surf_ = std::make_shared<const FactorSurface>(std::move(surf));
    return r;
}

double ConsumptionRule::factor(double t) const {
    if (!has_curve_) throw RuleError("deterministic factor requested from a surface rule");
    const double z = annuity_factor(f_, t, T_);
    if (t < T_ && !(z > 0.0))
        throw RuleError("factor not positive at t=" + std::to_string(t));
    return z;
}

double ConsumptionRule::factor(double t, double r) const {
    if (!surf_) return factor(t);
    const double z = surf_->value(t, r);
    if (t < T_ && !(z > 0.0))
        throw RuleError("factor not positive at t=" + std::to_string(t));
    return z;
}

const RateCurve& ConsumptionRule::rate_curve() const {
    if (!has_curve_) throw RuleError("surface rule has no rate curve");
    return f_;
}

const FactorSurface& ConsumptionRule::surf() const {
    if (!surf_) throw RuleError("deterministic rule has no surface");
    return *surf_;
}

} // namespace mcs
