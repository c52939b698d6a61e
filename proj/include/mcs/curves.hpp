#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mcs {

// Scalar function of time used as an annuity rate. Named parametric families
// carry an analytic antiderivative; generic callables fall back to quadrature.
//
// Families:
//   constant            f(t) = c
//   affine              f(t) = c0 + c1 * t
//   piecewise-constant  breakpoints t_0 < ... < t_k, value v_i on [t_i, t_{i+1})
//   tabulated           linear interpolation between (t_i, v_i) samples
//   callable            arbitrary function, no breakpoints assumed
class RateCurve {
public:
    enum class Kind { Constant, Affine, PiecewiseConstant, Tabulated, Callable };

    static RateCurve constant(double value);
    static RateCurve affine(double intercept, double slope);
    // values.size() == breakpoints.size() + 1; value i applies between
    // breakpoint i-1 and i (first value before the first breakpoint).
    static RateCurve piecewise_constant(std::vector<double> breakpoints,
                                        std::vector<double> values);
    static RateCurve tabulated(std::vector<double> times, std::vector<double> values);
    static RateCurve callable(std::function<double(double)> f);

    double operator()(double t) const;

    // Antiderivative with F(0) = 0; exact for the named families, per-interval
    // Gauss-Legendre accumulation for callables (cached, refined on demand).
    double antiderivative(double t) const;

    // integral of f over [a, b]
    double integrate(double a, double b) const { return antiderivative(b) - antiderivative(a); }

    Kind kind() const { return kind_; }
    bool is_constant() const { return kind_ == Kind::Constant; }
    double constant_value() const;
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    bool continuous_at(double t) const;

    // Curve algebra. Sums/scalings stay inside the named families where the
    // family is closed under the operation; otherwise the result is callable.
    friend RateCurve operator+(const RateCurve& a, const RateCurve& b);
    friend RateCurve operator*(double s, const RateCurve& c);
    RateCurve shifted(double offset) const; // f + offset

private:
    RateCurve() = default;

    Kind kind_ = Kind::Constant;
    // constant/affine coefficients
    double c0_ = 0.0, c1_ = 0.0;
    // piecewise-constant / tabulated data
    std::vector<double> breakpoints_;
    std::vector<double> values_;
    std::vector<double> cum_; // antiderivative values at breakpoints_
    // callable
    std::function<double(double)> fn_;
};

} // namespace mcs
