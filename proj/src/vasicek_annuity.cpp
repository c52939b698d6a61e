#include "mcs/vasicek_annuity.hpp"

#include <algorithm>
#include <cmath>

#include "mcs/errors.hpp"
#include "mcs/quadrature.hpp"

namespace mcs {

namespace {

// B(tau) = (1 - e^{-kappa tau})/kappa, the rate loading of the affine bond
double loading(double kappa, double tau) {
    if (kappa == 0.0) return tau;
    return -std::expm1(-kappa * tau) / kappa;
}

} // namespace

double vasicek_int_rate_mean(const VasicekMarket& m, double tau, double r) {
    // pricing drift: kappa (theta* - r) with theta* = theta + lambda1 sigma_r / kappa;
    // for kappa = 0 the drift is a plain constant lambda1 sigma_r
    const double B = loading(m.kappa, tau);
    if (m.kappa == 0.0) return r * tau + 0.5 * m.lambda1 * m.sigma_r * tau * tau;
    const double theta_star = m.theta + m.lambda1 * m.sigma_r / m.kappa;
    return theta_star * tau + (r - theta_star) * B;
}

double vasicek_int_rate_variance(const VasicekMarket& m, double tau) {
    if (m.sigma_r == 0.0) return 0.0;
    const double s2 = m.sigma_r * m.sigma_r;
    const double x = m.kappa * tau;
    if (std::abs(x) < 1e-2) {
        // series for the bracket tau - 2B + (1 - e^{-2 kappa tau})/(2 kappa)
        const double t3 = tau * tau * tau;
        return s2 * t3 * (1.0 / 3.0 - x / 4.0 + 7.0 * x * x / 60.0 - x * x * x / 24.0);
    }
    const double B = loading(m.kappa, tau);
    const double bracket = tau - 2.0 * B - std::expm1(-2.0 * m.kappa * tau) / (2.0 * m.kappa);
    return s2 / (m.kappa * m.kappa) * bracket;
}

double vasicek_bond_price(const VasicekMarket& m, double tau, double r) {
    if (tau < 0.0) throw DomainError("bond price requires tau >= 0");
    return std::exp(-vasicek_int_rate_mean(m, tau, r) + 0.5 * vasicek_int_rate_variance(m, tau));
}

double vasicek_annuity_certain(const VasicekMarket& m, double t, double r, double abs_tol) {
    if (t > m.T) throw DomainError("annuity certain requires t <= T");
    if (t == m.T) return 0.0;
    return adaptive_gauss_legendre(
        [&](double u) { return vasicek_bond_price(m, u - t, r); }, t, m.T, abs_tol);
}

double vasicek_annuity_duration(const VasicekMarket& m, double t, double r, double abs_tol) {
    if (t >= m.T) {
        return 0.0; // abar ~ tau, d abar/dr ~ -tau^2/2, so the ratio vanishes at T
    }
    const double tau_total = m.T - t;
    if (tau_total < 1e-8) return 0.5 * tau_total;
    const double num = adaptive_gauss_legendre(
        [&](double u) { return loading(m.kappa, u - t) * vasicek_bond_price(m, u - t, r); }, t,
        m.T, abs_tol);
    const double den = vasicek_annuity_certain(m, t, r, abs_tol);
    return num / den;
}

const VasicekAnnuityEvaluator::Table& VasicekAnnuityEvaluator::table(double t) const {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = cache_.find(t);
    if (it != cache_.end()) return it->second;

    // composite Gauss-Legendre with quarter-year panels; the integrand is an
    // entire function of u, so each panel is integrated to machine precision
    Table tab;
    const double tau_total = m_.T - t;
    const int panels = std::max(1, static_cast<int>(std::ceil(tau_total / 0.25)));
    const auto& rule = gl15();
    tab.loading.reserve(static_cast<std::size_t>(panels) * rule.nodes.size());
    tab.weight.reserve(static_cast<std::size_t>(panels) * rule.nodes.size());
    for (int p = 0; p < panels; ++p) {
        const double a = t + tau_total * p / panels;
        const double b = t + tau_total * (p + 1) / panels;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double u = mid + half * rule.nodes[i];
            const double tau = u - t;
            const double B = loading(m_.kappa, tau);
            // exp(A(tau)) = P(tau, r) * exp(B r) evaluated at r = 0
            const double expA = vasicek_bond_price(m_, tau, 0.0);
            tab.loading.push_back(B);
            tab.weight.push_back(half * rule.weights[i] * expA);
        }
    }
    return cache_.emplace(t, std::move(tab)).first->second;
}

double VasicekAnnuityEvaluator::value(double t, double r) const {
    if (t >= m_.T) return 0.0;
    const Table& tab = table(t);
    double sum = 0.0;
    for (std::size_t i = 0; i < tab.loading.size(); ++i)
        sum += tab.weight[i] * std::exp(-tab.loading[i] * r);
    return sum;
}

double VasicekAnnuityEvaluator::duration(double t, double r) const {
    if (t >= m_.T) return 0.0;
    const Table& tab = table(t);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < tab.loading.size(); ++i) {
        const double p = tab.weight[i] * std::exp(-tab.loading[i] * r);
        den += p;
        num += tab.loading[i] * p;
    }
    return num / den;
}

} // namespace mcs
