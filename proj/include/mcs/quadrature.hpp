#pragma once

#include <functional>
#include <vector>

namespace mcs {

// Gauss-Legendre nodes/weights on [-1,1], computed once per order by Newton
// iteration on the Legendre polynomial (machine precision).
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendreRule(int order);

    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            sum += weights[i] * f(mid + half * nodes[i]);
        return half * sum;
    }
};

const GaussLegendreRule& gl15();

// Adaptive Gauss-Legendre by interval bisection. Error estimate compares the
// whole-interval rule against the two-half refinement; absolute tolerance.
double adaptive_gauss_legendre(const std::function<double(double)>& f, double a, double b,
                               double abs_tol, int max_depth = 52);

// Same, but integration range is first split at the given interior points
// (curve breakpoints); points outside (a,b) are ignored.
double adaptive_gauss_legendre_split(const std::function<double(double)>& f, double a, double b,
                                     const std::vector<double>& split_points, double abs_tol);

} // namespace mcs
