#pragma once

#include <memory>

#include "mcs/annuity.hpp"
#include "mcs/curves.hpp"
#include "mcs/surface.hpp"

namespace mcs {

// Wealth-to-consumption rule c = X/Z. Deterministic rules carry Z(t) = B_f(t)
// through a rate curve f (exact antiderivative available); surface rules carry
// Z(t) = a(t, r(t)) through a FactorSurface.
class ConsumptionRule {
public:
    enum class Kind { McsDeterministic, Merton, AnnuityCertain, PdeSurface };

    static ConsumptionRule deterministic(Kind kind, RateCurve f, double horizon);
    static ConsumptionRule surface(Kind kind, FactorSurface surf);

    Kind kind() const { return kind_; }
    bool is_surface() const { return surf_ != nullptr; }
    double horizon() const { return T_; }

    // factor Z; throws RuleError if it is not positive before the horizon
    double factor(double t) const;
    double factor(double t, double r) const;

    const RateCurve& rate_curve() const;
    const FactorSurface& surf() const;

private:
    ConsumptionRule() = default;

    Kind kind_ = Kind::McsDeterministic;
    double T_ = 0.0;
    RateCurve f_ = RateCurve::constant(0.0);
    bool has_curve_ = false;
    std::shared_ptr<const FactorSurface> surf_;
};

} // namespace mcs
