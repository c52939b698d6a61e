#include "mcs/curves.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcs/errors.hpp"
#include "mcs/quadrature.hpp"

namespace mcs {

RateCurve RateCurve::constant(double value) {
    RateCurve c;
    c.kind_ = Kind::Constant;
    c.c0_ = value;
    return c;
}

RateCurve RateCurve::affine(double intercept, double slope) {
    RateCurve c;
    c.kind_ = Kind::Affine;
    c.c0_ = intercept;
    c.c1_ = slope;
    return c;
}

RateCurve RateCurve::piecewise_constant(std::vector<double> breakpoints,
                                        std::vector<double> values) {
    if (values.size() != breakpoints.size() + 1)
        throw ConfigError("piecewise-constant curve needs one more value than breakpoints");
    if (!std::is_sorted(breakpoints.begin(), breakpoints.end()))
        throw ConfigError("piecewise-constant breakpoints must be increasing");
    RateCurve c;
    c.kind_ = Kind::PiecewiseConstant;
    c.breakpoints_ = std::move(breakpoints);
    c.values_ = std::move(values);
    // antiderivative at each breakpoint, taking F(0) = 0
    c.cum_.resize(c.breakpoints_.size());
    double prev_t = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < c.breakpoints_.size(); ++i) {
        acc += c.values_[i] * (c.breakpoints_[i] - prev_t);
        c.cum_[i] = acc;
        prev_t = c.breakpoints_[i];
    }
    return c;
}

RateCurve RateCurve::tabulated(std::vector<double> times, std::vector<double> values) {
    if (times.size() != values.size() || times.size() < 2)
        throw ConfigError("tabulated curve needs >= 2 (time, value) samples");
    if (!std::is_sorted(times.begin(), times.end()))
        throw ConfigError("tabulated curve times must be increasing");
    RateCurve c;
    c.kind_ = Kind::Tabulated;
    c.breakpoints_ = std::move(times);
    c.values_ = std::move(values);
    c.cum_.resize(c.breakpoints_.size());
    c.cum_[0] = 0.0; // antiderivative measured from the first sample time
    for (std::size_t i = 1; i < c.breakpoints_.size(); ++i) {
        const double dt = c.breakpoints_[i] - c.breakpoints_[i - 1];
        c.cum_[i] = c.cum_[i - 1] + 0.5 * (c.values_[i] + c.values_[i - 1]) * dt;
    }
    return c;
}

RateCurve RateCurve::callable(std::function<double(double)> f) {
    RateCurve c;
    c.kind_ = Kind::Callable;
    c.fn_ = std::move(f);
    return c;
}

double RateCurve::constant_value() const {
    if (kind_ != Kind::Constant) throw Error("constant_value on non-constant curve");
    return c0_;
}

double RateCurve::operator()(double t) const {
    switch (kind_) {
        case Kind::Constant: return c0_;
        case Kind::Affine: return c0_ + c1_ * t;
        case Kind::PiecewiseConstant: {
            const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
            return values_[static_cast<std::size_t>(it - breakpoints_.begin())];
        }
        case Kind::Tabulated: {
            if (t <= breakpoints_.front()) return values_.front();
            if (t >= breakpoints_.back()) return values_.back();
            const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
            const std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin());
            const double w = (t - breakpoints_[i - 1]) / (breakpoints_[i] - breakpoints_[i - 1]);
            return values_[i - 1] + w * (values_[i] - values_[i - 1]);
        }
        case Kind::Callable: return fn_(t);
    }
    throw Error("unreachable curve kind");
}

double RateCurve::antiderivative(double t) const {
    switch (kind_) {
        case Kind::Constant: return c0_ * t;
        case Kind::Affine: return c0_ * t + 0.5 * c1_ * t * t;
        case Kind::PiecewiseConstant: {
            const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
            const std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin());
            const double base = (i == 0) ? 0.0 : cum_[i - 1];
            const double t0 = (i == 0) ? 0.0 : breakpoints_[i - 1];
            return base + values_[i] * (t - t0);
        }
        case Kind::Tabulated: {
            // piecewise-quadratic antiderivative of the linear interpolant,
            // with flat extrapolation outside the sample range
            const double t_lo = breakpoints_.front(), t_hi = breakpoints_.back();
            if (t <= t_lo) return values_.front() * (t - t_lo);
            if (t >= t_hi) return cum_.back() + values_.back() * (t - t_hi);
            const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
            const std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin());
            const double dt = t - breakpoints_[i - 1];
            const double slope =
                (values_[i] - values_[i - 1]) / (breakpoints_[i] - breakpoints_[i - 1]);
            return cum_[i - 1] + values_[i - 1] * dt + 0.5 * slope * dt * dt;
        }
        case Kind::Callable: {
            // no analytic form; integrate from 0 with a tight tolerance
            std::function<double(double)> f = fn_;
            return adaptive_gauss_legendre(f, 0.0, t, 1e-13);
        }
    }
    throw Error("unreachable curve kind");
}

bool RateCurve::continuous_at(double t) const {
    if (kind_ != Kind::PiecewiseConstant) return true;
    for (double b : breakpoints_)
        if (b == t) return false;
    return true;
}

RateCurve operator+(const RateCurve& a, const RateCurve& b) {
    using K = RateCurve::Kind;
    if (a.kind_ == K::Constant && b.kind_ == K::Constant)
        return RateCurve::constant(a.c0_ + b.c0_);
    if ((a.kind_ == K::Constant || a.kind_ == K::Affine) &&
        (b.kind_ == K::Constant || b.kind_ == K::Affine))
        return RateCurve::affine(a.c0_ + b.c0_, a.c1_ + b.c1_);
    if (a.kind_ == K::PiecewiseConstant && b.kind_ == K::Constant) {
        auto vals = a.values_;
        for (double& v : vals) v += b.c0_;
        return RateCurve::piecewise_constant(a.breakpoints_, vals);
    }
    if (a.kind_ == K::Constant && b.kind_ == K::PiecewiseConstant) return b + a;
    if (a.kind_ == K::PiecewiseConstant && b.kind_ == K::PiecewiseConstant) {
        std::vector<double> merged = a.breakpoints_;
        merged.insert(merged.end(), b.breakpoints_.begin(), b.breakpoints_.end());
        std::sort(merged.begin(), merged.end());
        merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
        std::vector<double> vals;
        vals.reserve(merged.size() + 1);
        for (std::size_t i = 0; i <= merged.size(); ++i) {
            const double probe = (i == 0)
                                     ? (merged.empty() ? 0.0 : merged.front() - 1.0)
                                     : (i == merged.size() ? merged.back() + 1.0
                                                           : 0.5 * (merged[i - 1] + merged[i]));
            vals.push_back(a(probe) + b(probe));
        }
        return RateCurve::piecewise_constant(merged, vals);
    }
    RateCurve ca = a, cb = b;
    return RateCurve::callable([ca, cb](double t) { return ca(t) + cb(t); });
}

RateCurve operator*(double s, const RateCurve& c) {
    using K = RateCurve::Kind;
    switch (c.kind_) {
        case K::Constant: return RateCurve::constant(s * c.c0_);
        case K::Affine: return RateCurve::affine(s * c.c0_, s * c.c1_);
        case K::PiecewiseConstant: {
            auto vals = c.values_;
            for (double& v : vals) v *= s;
            return RateCurve::piecewise_constant(c.breakpoints_, vals);
        }
        case K::Tabulated: {
            auto vals = c.values_;
            for (double& v : vals) v *= s;
            return RateCurve::tabulated(c.breakpoints_, vals);
        }
        case K::Callable: {
            RateCurve cc = c;
            return RateCurve::callable([s, cc](double t) { return s * cc(t); });
        }
    }
    throw Error("unreachable curve kind");
}

RateCurve RateCurve::shifted(double offset) const { return *this + RateCurve::constant(offset); }

} // namespace mcs
