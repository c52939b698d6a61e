#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mcs/curves.hpp"

namespace mcs {

// Market with deterministic coefficient functions on [0, T]: short rate r(t),
// per-asset drifts alpha_i(t) and an n x n volatility matrix sigma(t).
// Immutable after construction; evaluation outside [0, T] is rejected.
class DeterministicMarket {
public:
    DeterministicMarket(double horizon, RateCurve r, std::vector<RateCurve> alpha,
                        std::vector<std::vector<RateCurve>> sigma);

    // money-market only
    DeterministicMarket(double horizon, RateCurve r);

    double horizon() const { return T_; }
    int asset_count() const { return n_; }

    double rate(double t) const;
    std::vector<double> drift(double t) const;
    std::vector<std::vector<double>> volatility(double t) const;

    const RateCurve& rate_curve() const { return r_; }
    const RateCurve& drift_curve(int i) const { return alpha_[static_cast<std::size_t>(i)]; }
    const RateCurve& volatility_curve(int i, int j) const {
        return sigma_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }

    // market price of risk lambda(t) = sigma(t)^{-1} (alpha(t) - 1 r(t)),
    // solved (never inverted); throws SingularVolatilityError when the
    // condition estimate of sigma(t) exceeds 1e12.
    std::vector<double> lambda_of(double t) const;

private:
    void check_time(double t) const;

    double T_;
    int n_;
    RateCurve r_;
    std::vector<RateCurve> alpha_;
    std::vector<std::vector<RateCurve>> sigma_;
};

// Two-asset market with a Vasicek short rate:
//
//   dr(t) = kappa (theta - r(t)) dt - sigma_r dW_1(t)
//
// Note the minus sign on the diffusion: a positive W_1 shock lowers the rate
// and raises bond prices. Asset 1 ("bond") loads on W_1 via sigma11(t, r);
// asset 2 ("stock") loads on (W_1, W_2) via (sigma21(t, r), sigma22).
struct VasicekMarket {
    double kappa = 0.0;
    double theta = 0.0;
    double sigma_r = 0.0; // >= 0; zero gives the deterministic degenerate rate
    double r0 = 0.0;
    double lambda1 = 0.0; // market price of interest-rate risk
    double lambda2 = 0.0; // market price of stock risk
    std::function<double(double, double)> sigma11; // bond rate-volatility
    std::function<double(double, double)> sigma21; // stock rate-volatility
    double sigma22 = 0.0; // stock own-volatility, nonzero
    double T = 0.0;

    void validate() const;

    double mu(double r) const { return kappa * (theta - r); }

    // Exact Ornstein-Uhlenbeck transition over a step of length dt:
    // conditional mean and standard deviation of r(t+dt) given r(t).
    double ou_mean(double r, double dt) const;
    double ou_stdev(double dt) const;

    // Default coefficient instances: Vasicek zero-coupon-bond volatility for
    // sigma11 (bond maturing at bond_maturity) and a constant for sigma21.
    // These are implementation defaults, not canonical model content.
    static std::function<double(double, double)> zcb_volatility(double kappa, double sigma_r,
                                                                double bond_maturity);
};

enum class RateScheme { ExactOU, Euler };

// Short-rate path on the given strictly increasing grid (grid[0] = 0,
// grid.back() = T), one standard-normal draw per step. The draw enters with a
// flipped sign to honor the -sigma_r dW_1 convention.
std::vector<double> short_rate_path(const VasicekMarket& market, const std::vector<double>& grid,
                                    const std::vector<double>& noise,
                                    RateScheme scheme = RateScheme::ExactOU);

} // namespace mcs
