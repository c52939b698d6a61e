#include "mcs/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mcs/errors.hpp"

namespace mcs {

DeterministicMarket::DeterministicMarket(double horizon, RateCurve r,
                                         std::vector<RateCurve> alpha,
                                         std::vector<std::vector<RateCurve>> sigma)
    : T_(horizon), n_(static_cast<int>(alpha.size())), r_(std::move(r)),
      alpha_(std::move(alpha)), sigma_(std::move(sigma)) {
    if (T_ <= 0.0) throw ConfigError("market horizon must be positive");
    if (sigma_.size() != alpha_.size())
        throw ConfigError("sigma must have one row per asset");
    for (const auto& row : sigma_)
        if (row.size() != alpha_.size())
            throw ConfigError("sigma must be a square n x n matrix of curves");
}

DeterministicMarket::DeterministicMarket(double horizon, RateCurve r)
    : DeterministicMarket(horizon, std::move(r), {}, {}) {}

void DeterministicMarket::check_time(double t) const {
    if (t < 0.0 || t > T_)
        throw DomainError("coefficient evaluation at t=" + std::to_string(t) +
                          " outside [0, " + std::to_string(T_) + "]");
}

double DeterministicMarket::rate(double t) const {
    check_time(t);
    const double v = r_(t);
    if (!std::isfinite(v)) throw DomainError("non-finite rate at t=" + std::to_string(t));
    return v;
}

std::vector<double> DeterministicMarket::drift(double t) const {
    check_time(t);
    std::vector<double> out(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
        out[static_cast<std::size_t>(i)] = alpha_[static_cast<std::size_t>(i)](t);
        if (!std::isfinite(out[static_cast<std::size_t>(i)]))
            throw DomainError("non-finite drift at t=" + std::to_string(t));
    }
    return out;
}

std::vector<std::vector<double>> DeterministicMarket::volatility(double t) const {
    check_time(t);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(n_),
                                         std::vector<double>(static_cast<std::size_t>(n_)));
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) {
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                sigma_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](t);
            if (!std::isfinite(out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]))
                throw DomainError("non-finite volatility at t=" + std::to_string(t));
        }
    return out;
}

namespace {

// Solve A x = b by Gaussian elimination with partial pivoting; also returns a
// cheap infinity-norm condition estimate through the pivot ratio.
std::vector<double> solve_dense(std::vector<std::vector<double>> A, std::vector<double> b,
                                double t) {
    const std::size_t n = b.size();
    double max_entry = 0.0;
    for (const auto& row : A)
        for (double v : row) max_entry = std::max(max_entry, std::abs(v));
    double min_pivot = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(A[i][k]) > std::abs(A[piv][k])) piv = i;
        if (piv != k) {
            std::swap(A[piv], A[k]);
            std::swap(b[piv], b[k]);
        }
        const double p = A[k][k];
        min_pivot = std::min(min_pivot, std::abs(p));
        if (std::abs(p) == 0.0 || max_entry / std::abs(p) > 1e12)
            throw SingularVolatilityError(t, "pivot ratio exceeds 1e12");
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = A[i][k] / p;
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) A[i][j] -= f * A[k][j];
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= A[k][j] * x[j];
        x[k] = s / A[k][k];
    }
    return x;
}

} // namespace

std::vector<double> DeterministicMarket::lambda_of(double t) const {
    const double r_t = rate(t);
    std::vector<double> excess = drift(t);
    for (double& v : excess) v -= r_t;
    if (n_ == 0) return {};
    return solve_dense(volatility(t), std::move(excess), t);
}

void VasicekMarket::validate() const {
    if (T <= 0.0) throw ConfigError("Vasicek market horizon must be positive");
    if (sigma_r < 0.0) throw ConfigError("sigma_r must be nonnegative");
    if (sigma22 == 0.0) throw ConfigError("sigma22 must be nonzero");
    if (!sigma11 || !sigma21) throw ConfigError("sigma11 and sigma21 must be set");
}

double VasicekMarket::ou_mean(double r, double dt) const {
    if (kappa == 0.0) return r;
    return theta + (r - theta) * std::exp(-kappa * dt);
}

double VasicekMarket::ou_stdev(double dt) const {
    if (sigma_r == 0.0) return 0.0;
    if (kappa == 0.0) return sigma_r * std::sqrt(dt); // analytic kappa -> 0 limit
    return sigma_r * std::sqrt(-std::expm1(-2.0 * kappa * dt) / (2.0 * kappa));
}

std::function<double(double, double)> VasicekMarket::zcb_volatility(double kappa, double sigma_r,
                                                                    double bond_maturity) {
    return [kappa, sigma_r, bond_maturity](double t, double /*r*/) {
        const double tau = std::max(0.0, bond_maturity - t);
        const double loading = (kappa == 0.0) ? tau : -std::expm1(-kappa * tau) / kappa;
        return sigma_r * loading;
    };
}

std::vector<double> short_rate_path(const VasicekMarket& market, const std::vector<double>& grid,
                                    const std::vector<double>& noise, RateScheme scheme) {
    if (grid.size() < 2 || grid.front() != 0.0)
        throw InvalidGridError("time grid must start at 0 and have >= 2 points");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (grid[k] <= grid[k - 1]) throw InvalidGridError("time grid must be strictly increasing");
    if (noise.size() != grid.size() - 1)
        throw InvalidGridError("need one normal draw per grid step");

    std::vector<double> path(grid.size());
    path[0] = market.r0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double dt = grid[k + 1] - grid[k];
        // noise sign flipped: the rate diffusion is -sigma_r dW_1
        if (scheme == RateScheme::ExactOU) {
            path[k + 1] = market.ou_mean(path[k], dt) - market.ou_stdev(dt) * noise[k];
        } else {
            path[k + 1] =
                path[k] + market.mu(path[k]) * dt - market.sigma_r * std::sqrt(dt) * noise[k];
        }
    }
    return path;
}

} // namespace mcs
