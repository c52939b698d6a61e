#pragma once

#include <map>
#include <mutex>
#include <vector>

#include "mcs/market.hpp"

namespace mcs {

// Closed-form pricing under the Vasicek dynamics with risk-adjusted drift
// mu*(r) = kappa (theta - r) + lambda1 sigma_r. The integrated rate over a
// horizon tau given r is Gaussian; bond prices follow from its mean and
// variance, and the annuity certain is the bond-price integral.

// integrated-rate mean m(tau, r) and variance v(tau) under the pricing drift
double vasicek_int_rate_mean(const VasicekMarket& m, double tau, double r);
double vasicek_int_rate_variance(const VasicekMarket& m, double tau);

// zero-coupon bond price P(t, t+tau | r) = exp(-m + v/2)
double vasicek_bond_price(const VasicekMarket& m, double tau, double r);

// annuity certain abar(t, r) = integral_t^T P(t, u | r) du
double vasicek_annuity_certain(const VasicekMarket& m, double t, double r,
                               double abs_tol = 1e-10);

// duration D_abar(t, r) = -(d abar/dr)/abar, from the affine structure
double vasicek_annuity_duration(const VasicekMarket& m, double t, double r,
                                double abs_tol = 1e-10);

// Closed-form evaluator for repeated (t, r) sweeps. The bond-price integral
// at fixed t is a weighted sum of exp(-B_i r) over fixed quadrature nodes, so
// the node tables are built once per time level and cached.
class VasicekAnnuityEvaluator {
public:
    explicit VasicekAnnuityEvaluator(VasicekMarket m) : m_(std::move(m)) {}

    double value(double t, double r) const;
    double duration(double t, double r) const;

private:
    struct Table {
        std::vector<double> loading;  // B(u_i - t)
        std::vector<double> weight;   // w_i * exp(A(u_i - t))
    };
    const Table& table(double t) const;

    VasicekMarket m_;
    mutable std::mutex mu_;
    mutable std::map<double, Table> cache_;
};

} // namespace mcs
