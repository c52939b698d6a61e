#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mcs/errors.hpp"

namespace mcs {

// Banded LU with partial pivoting, LAPACK-style band storage. Bandwidths
// (kl, ku); factorization fills up to kl extra superdiagonals.
class BandedLU {
public:
    BandedLU(int n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
          ab_(static_cast<std::size_t>(ldab_) * static_cast<std::size_t>(n), 0.0),
          ipiv_(static_cast<std::size_t>(n), 0) {}

    // A(i, j), valid for j - ku <= i <= j + kl
    double& entry(int i, int j) { return ab_[idx(i, j)]; }

    void factorize() {
        const int kv = kl_ + ku_;
        int ju = 0; // last column touched by any active row, grows with fill
        for (int j = 0; j < n_; ++j) {
            const int km = std::min(kl_, n_ - 1 - j);
            int jp = 0;
            double amax = std::abs(ab_[aidx(kv, j)]);
            for (int i = 1; i <= km; ++i) {
                const double v = std::abs(ab_[aidx(kv + i, j)]);
                if (v > amax) {
                    amax = v;
                    jp = i;
                }
            }
            ipiv_[static_cast<std::size_t>(j)] = j + jp;
            if (amax == 0.0) throw Error("banded LU: singular matrix");
            ju = std::max(ju, std::min(n_ - 1, j + ku_ + jp));
            if (jp != 0)
                for (int col = j; col <= ju; ++col)
                    std::swap(ab_[aidx(kv + j - col, col)], ab_[aidx(kv + j + jp - col, col)]);
            const double piv = ab_[aidx(kv, j)];
            for (int i = 1; i <= km; ++i) {
                const double m = ab_[aidx(kv + i, j)] / piv;
                ab_[aidx(kv + i, j)] = m;
                for (int col = j + 1; col <= ju; ++col)
                    ab_[aidx(kv + i + j - col, col)] -= m * ab_[aidx(kv + j - col, col)];
            }
        }
    }

    void solve(std::vector<double>& b) const {
        const int kv = kl_ + ku_;
        for (int j = 0; j < n_; ++j) {
            const int p = ipiv_[static_cast<std::size_t>(j)];
            if (p != j) std::swap(b[static_cast<std::size_t>(j)], b[static_cast<std::size_t>(p)]);
            const int km = std::min(kl_, n_ - 1 - j);
            for (int i = 1; i <= km; ++i)
                b[static_cast<std::size_t>(j + i)] -=
                    ab_[aidx(kv + i, j)] * b[static_cast<std::size_t>(j)];
        }
        for (int j = n_ - 1; j >= 0; --j) {
            double s = b[static_cast<std::size_t>(j)];
            for (int col = j + 1; col <= std::min(n_ - 1, j + kv); ++col)
                s -= ab_[aidx(kv + j - col, col)] * b[static_cast<std::size_t>(col)];
            b[static_cast<std::size_t>(j)] = s / ab_[aidx(kv, j)];
        }
    }

private:
    std::size_t idx(int i, int j) const { return aidx(kl_ + ku_ + i - j, j); }
    std::size_t aidx(int row, int col) const {
        return static_cast<std::size_t>(col) * static_cast<std::size_t>(ldab_) +
               static_cast<std::size_t>(row);
    }

    int n_, kl_, ku_, ldab_;
    std::vector<double> ab_;
    std::vector<int> ipiv_;
};

} // namespace mcs
