#include "mcs/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcs {

GaussLegendreRule::GaussLegendreRule(int order) {
    if (order < 2) throw std::invalid_argument("GaussLegendreRule: order must be >= 2");
    nodes.resize(order);
    weights.resize(order);
    const int m = (order + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Chebyshev-based initial guess for the i-th root of P_n.
        double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < order; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = order * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[order - 1 - i] = weights[i];
    }
}

const GaussLegendreRule& gl15() {
    static const GaussLegendreRule rule(15);
    return rule;
}

namespace {

double adapt(const std::function<double(double)>& f, double a, double b, double whole,
             double abs_tol, int depth) {
    const double mid = 0.5 * (a + b);
    const double left = gl15().integrate(f, a, mid);
    const double right = gl15().integrate(f, mid, b);
    const double err = std::abs(left + right - whole);
    if (err <= abs_tol || depth <= 0) return left + right;
    return adapt(f, a, mid, left, 0.5 * abs_tol, depth - 1) +
           adapt(f, mid, b, right, 0.5 * abs_tol, depth - 1);
}

} // namespace

double adaptive_gauss_legendre(const std::function<double(double)>& f, double a, double b,
                               double abs_tol, int max_depth) {
    if (a == b) return 0.0;
    return adapt(f, a, b, gl15().integrate(f, a, b), abs_tol, max_depth);
}

double adaptive_gauss_legendre_split(const std::function<double(double)>& f, double a, double b,
                                     const std::vector<double>& split_points, double abs_tol) {
    std::vector<double> pts;
    pts.push_back(a);
    for (double p : split_points)
        if (p > a && p < b) pts.push_back(p);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    double sum = 0.0;
    const double tol_per = abs_tol / static_cast<double>(pts.size() - 1);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        sum += adaptive_gauss_legendre(f, pts[i], pts[i + 1], tol_per);
    return sum;
}

} // namespace mcs
