#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mcs/errors.hpp"

namespace mcs {

// Uniform tensor grid on [0, T] x [r_min, r_max].
struct Grid2D {
    double T = 0.0;
    double r_min = 0.0;
    double r_max = 0.0;
    int nt = 0; // time levels including both ends
    int nr = 0; // rate nodes including both ends

    void validate() const {
        if (nt < 3 || nr < 3) throw InvalidGridError("grid needs nt >= 3 and nr >= 3");
        if (!(r_min < r_max)) throw InvalidGridError("grid needs r_min < r_max");
        if (T <= 0.0) throw InvalidGridError("grid needs T > 0");
    }
    void validate_contains(double r0) const {
        validate();
        if (!(r_min < r0 && r0 < r_max))
            throw InvalidGridError("grid must bracket the initial rate r0");
    }

    double dt() const { return T / (nt - 1); }
    double dr() const { return (r_max - r_min) / (nr - 1); }
    double t(int i) const { return T * i / (nt - 1); }
    double r(int j) const { return r_min + dr() * j; }

    // rate domain covering mean +/- width stationary standard deviations,
    // falling back to a fixed band when sigma_r = 0
    static Grid2D around_stationary(double T, double r0, double theta, double kappa,
                                    double sigma_r, int nt, int nr, double width = 6.0) {
        double sd = 0.0;
        if (sigma_r > 0.0)
            sd = (kappa > 0.0) ? sigma_r / std::sqrt(2.0 * kappa) : sigma_r * std::sqrt(T);
        const double half = std::max(width * sd, 0.02);
        const double mid = 0.5 * (r0 + theta);
        Grid2D g{T, mid - half - std::abs(r0 - theta), mid + half + std::abs(r0 - theta), nt, nr};
        g.validate_contains(r0);
        return g;
    }
};

// Wealth-to-consumption factor a(t, r) on a Grid2D. The factor vanishes
// linearly at t = T, so interpolation acts on a/(T-t) (value 1 at the
// terminal level) and the duration acts on D_a/(T-t) (value 1/2 there);
// this keeps relative interpolation error bounded through the terminal
// layer instead of blowing up like 1/(T-t).
class FactorSurface {
public:
    enum class Provenance { Pde, Ansatz, ClosedFormAnnuity };

    FactorSurface(Grid2D grid, Provenance prov);

    const Grid2D& grid() const { return grid_; }
    Provenance provenance() const { return prov_; }

    double& at(int it, int jr) { return vals_[idx(it, jr)]; }
    double at(int it, int jr) const { return vals_[idx(it, jr)]; }

    // d a / d r at a node: central differences, one-sided (second order) at
    // the rate boundaries
    double deriv_r_node(int it, int jr) const;
    // duration D_a = -(da/dr)/a at a node; 0 at the terminal level
    double duration_node(int it, int jr) const;

    // bilinear interpolation in the scaled variables described above;
    // r is clamped to [r_min, r_max]
    double value(double t, double r) const;
    double duration(double t, double r) const;

    // strict positivity for t < T; throws PositivityLossError with a slice
    // dump when violated
    void check_positive() const;

    static std::string provenance_name(Provenance p);

    // samples a callable a(t, r) onto the grid
    static FactorSurface sample(const Grid2D& grid, Provenance prov,
                                const std::function<double(double, double)>& f);

private:
    std::size_t idx(int it, int jr) const {
        return static_cast<std::size_t>(it) * static_cast<std::size_t>(grid_.nr) +
               static_cast<std::size_t>(jr);
    }
    void locate_r(double r, int& j0, double& wr) const;

    Grid2D grid_;
    Provenance prov_;
    std::vector<double> vals_;
};

} // namespace mcs
