#pragma once

// Banded matrices with LU factorization (partial pivoting). Storage keeps
// kl extra superdiagonals for pivoting fill-in, LAPACK-style. Sized for the
// desk-scale block-banded step operators of the coupled systems.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "memheat/errors.hpp"

namespace memheat::detail {

class BandMatrix {
public:
    BandMatrix() = default;
    BandMatrix(int n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), ku_store_(ku + kl),
          data_(static_cast<std::size_t>(kl + ku + kl + 1) * static_cast<std::size_t>(n), 0.0) {}

    [[nodiscard]] int size() const { return n_; }
    [[nodiscard]] int lower_bandwidth() const { return kl_; }
    [[nodiscard]] int upper_bandwidth() const { return ku_; }

    // Entry (i, j); valid for -kl <= j-i <= ku+kl.
    double& at(int i, int j) {
        return data_[static_cast<std::size_t>(j - i + kl_) * static_cast<std::size_t>(n_) +
                     static_cast<std::size_t>(i)];
    }
    [[nodiscard]] double at(int i, int j) const {
        return data_[static_cast<std::size_t>(j - i + kl_) * static_cast<std::size_t>(n_) +
                     static_cast<std::size_t>(i)];
    }

    void add(int i, int j, double v) { at(i, j) += v; }

    // y = A x over the logical band [-kl, ku].
    void matvec(std::span<const double> x, std::span<double> y) const {
        std::fill(y.begin(), y.end(), 0.0);
        for (int d = -kl_; d <= ku_; ++d) {
            const int i0 = std::max(0, -d);
            const int i1 = std::min(n_, n_ - d);
            const double* diag = &data_[static_cast<std::size_t>(d + kl_) *
                                        static_cast<std::size_t>(n_)];
            for (int i = i0; i < i1; ++i) y[i] += diag[i] * x[i + d];
        }
    }

    [[nodiscard]] BandMatrix transposed() const {
        BandMatrix t(n_, ku_, kl_);
        for (int i = 0; i < n_; ++i) {
            const int j0 = std::max(0, i - kl_);
            const int j1 = std::min(n_ - 1, i + ku_);
            for (int j = j0; j <= j1; ++j) t.at(j, i) = at(i, j);
        }
        return t;
    }

private:
    friend class BandLU;
    int n_ = 0, kl_ = 0, ku_ = 0, ku_store_ = 0;
    std::vector<double> data_;
};

class BandLU {
public:
    explicit BandLU(BandMatrix a) : a_(std::move(a)), piv_(static_cast<std::size_t>(a_.n_)) {
        factor();
    }

    void solve_inplace(std::span<double> b) const {
        const int n = a_.n_;
        for (int k = 0; k < n; ++k) {
            const int p = piv_[static_cast<std::size_t>(k)];
            if (p != k) std::swap(b[k], b[p]);
            const int imax = std::min(n - 1, k + a_.kl_);
            for (int i = k + 1; i <= imax; ++i) b[i] -= a_.at(i, k) * b[k];
        }
        for (int k = n - 1; k >= 0; --k) {
            const int jmax = std::min(n - 1, k + a_.ku_store_);
            double s = b[k];
            for (int j = k + 1; j <= jmax; ++j) s -= a_.at(k, j) * b[j];
            b[k] = s / a_.at(k, k);
        }
    }

private:
    void factor() {
        const int n = a_.n_;
        for (int k = 0; k < n; ++k) {
            const int imax = std::min(n - 1, k + a_.kl_);
            int p = k;
            for (int i = k + 1; i <= imax; ++i)
                if (std::abs(a_.at(i, k)) > std::abs(a_.at(p, k))) p = i;
            piv_[static_cast<std::size_t>(k)] = p;
            if (a_.at(p, k) == 0.0)
                throw numeric_error("banded LU: singular matrix at column " + std::to_string(k));
            const int jmax = std::min(n - 1, k + a_.ku_store_);
            if (p != k)
                for (int j = k; j <= jmax; ++j) std::swap(a_.at(k, j), a_.at(p, j));
            for (int i = k + 1; i <= imax; ++i) {
                const double l = a_.at(i, k) / a_.at(k, k);
                a_.at(i, k) = l;
                for (int j = k + 1; j <= jmax; ++j) a_.at(i, j) -= l * a_.at(k, j);
            }
        }
    }

    BandMatrix a_;
    std::vector<int> piv_;
};

}  // namespace memheat::detail
