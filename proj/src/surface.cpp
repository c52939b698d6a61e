#include "mcs/surface.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mcs {

FactorSurface::FactorSurface(Grid2D grid, Provenance prov) : grid_(grid), prov_(prov) {
    grid_.validate();
    vals_.assign(static_cast<std::size_t>(grid_.nt) * static_cast<std::size_t>(grid_.nr), 0.0);
}

double FactorSurface::deriv_r_node(int it, int jr) const {
    const double dr = grid_.dr();
    if (jr == 0)
        return (-3.0 * at(it, 0) + 4.0 * at(it, 1) - at(it, 2)) / (2.0 * dr);
    if (jr == grid_.nr - 1)
        return (3.0 * at(it, jr) - 4.0 * at(it, jr - 1) + at(it, jr - 2)) / (2.0 * dr);
    return (at(it, jr + 1) - at(it, jr - 1)) / (2.0 * dr);
}

double FactorSurface::duration_node(int it, int jr) const {
    if (it == grid_.nt - 1) return 0.0;
    const double a = at(it, jr);
    if (a <= 0.0) return 0.0;
    return -deriv_r_node(it, jr) / a;
}

void FactorSurface::locate_r(double r, int& j0, double& wr) const {
    const double x = (std::clamp(r, grid_.r_min, grid_.r_max) - grid_.r_min) / grid_.dr();
    j0 = std::min(static_cast<int>(x), grid_.nr - 2);
    wr = x - j0;
}

double FactorSurface::value(double t, double r) const {
    if (t >= grid_.T) return 0.0;
    const double x = std::max(0.0, t) / grid_.dt();
    const int i0 = std::min(static_cast<int>(x), grid_.nt - 2);
    const double wt = x - i0;
    int j0;
    double wr;
    locate_r(r, j0, wr);
    // scaled nodal values a/(T - t); 1 at the terminal level by the a ~ T-t expansion
    auto psi = [&](int it, int jr) {
        const double tau = grid_.T - grid_.t(it);
        return (it == grid_.nt - 1) ? 1.0 : at(it, jr) / tau;
    };
    const double lo = (1.0 - wr) * psi(i0, j0) + wr * psi(i0, j0 + 1);
    const double hi = (1.0 - wr) * psi(i0 + 1, j0) + wr * psi(i0 + 1, j0 + 1);
    return (grid_.T - t) * ((1.0 - wt) * lo + wt * hi);
}

double FactorSurface::duration(double t, double r) const {
    if (t >= grid_.T) return 0.0;
    const double x = std::max(0.0, t) / grid_.dt();
    const int i0 = std::min(static_cast<int>(x), grid_.nt - 2);
    const double wt = x - i0;
    int j0;
    double wr;
    locate_r(r, j0, wr);
    // scaled duration D_a/(T - t); 1/2 at the terminal level
    auto chi = [&](int it, int jr) {
        const double tau = grid_.T - grid_.t(it);
        return (it == grid_.nt - 1) ? 0.5 : duration_node(it, jr) / tau;
    };
    const double lo = (1.0 - wr) * chi(i0, j0) + wr * chi(i0, j0 + 1);
    const double hi = (1.0 - wr) * chi(i0 + 1, j0) + wr * chi(i0 + 1, j0 + 1);
    return (grid_.T - t) * ((1.0 - wt) * lo + wt * hi);
}

void FactorSurface::check_positive() const {
    for (int it = 0; it < grid_.nt - 1; ++it)
        for (int jr = 0; jr < grid_.nr; ++jr)
            if (!(at(it, jr) > 0.0)) {
                std::ostringstream os;
                os << "a(t=" << grid_.t(it) << ", r=" << grid_.r(jr) << ") = " << at(it, jr)
                   << "; slice:";
                for (int k = std::max(0, jr - 2); k <= std::min(grid_.nr - 1, jr + 2); ++k)
                    os << " a[r=" << grid_.r(k) << "]=" << at(it, k);
                throw PositivityLossError(os.str());
            }
}

std::string FactorSurface::provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Pde: return "pde";
        case Provenance::Ansatz: return "ansatz";
        case Provenance::ClosedFormAnnuity: return "closed-form-annuity";
    }
    return "unknown";
}

FactorSurface FactorSurface::sample(const Grid2D& grid, Provenance prov,
                                    const std::function<double(double, double)>& f) {
    FactorSurface s(grid, prov);
    for (int it = 0; it < grid.nt; ++it)
        for (int jr = 0; jr < grid.nr; ++jr) s.at(it, jr) = f(grid.t(it), grid.r(jr));
    return s;
}

} // namespace mcs
