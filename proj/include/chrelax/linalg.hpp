#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "chrelax/errors.hpp"

namespace chrelax {

/// General band matrix with LU factorization and partial pivoting.
/// Column-major band storage in LAPACK layout: A(i,j) lives at
/// ab[(kl + ku + i - j) + j * ldab] for j - ku <= i <= j + kl, with kl extra
/// rows on top absorbing pivoting fill-in.
class BandMatrix {
public:
    BandMatrix(int n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
          ab_(static_cast<std::size_t>(ldab_) * n, 0.0), piv_(n, 0) {}

    int size() const { return n_; }

    void add(int i, int j, double v) {
        ab_[static_cast<std::size_t>(kl_ + ku_ + i - j) + static_cast<std::size_t>(j) * ldab_] += v;
    }
    void set(int i, int j, double v) {
        ab_[static_cast<std::size_t>(kl_ + ku_ + i - j) + static_cast<std::size_t>(j) * ldab_] = v;
    }
    double get(int i, int j) const {
        if (j - i > ku_ + kl_ || i - j > kl_) return 0.0;
        return ab_[static_cast<std::size_t>(kl_ + ku_ + i - j) + static_cast<std::size_t>(j) * ldab_];
    }

    void factor() {
        const int kv = kl_ + ku_; // superdiagonals incl. fill
        for (int j = 0; j < n_; ++j) {
            const int ilast = std::min(n_ - 1, j + kl_);
            int p = j;
            double amax = std::abs(at(j, j));
            for (int i = j + 1; i <= ilast; ++i) {
                const double a = std::abs(at(i, j));
                if (a > amax) { amax = a; p = i; }
            }
            if (amax == 0.0) throw LinearSolveFailure("band LU: zero pivot column");
            piv_[j] = p;
            const int jlast = std::min(n_ - 1, j + kv);
            if (p != j)
                for (int c = j; c <= jlast; ++c) std::swap(at(j, c), at(p, c));
            const double d = at(j, j);
            for (int i = j + 1; i <= ilast; ++i) {
                const double m = at(i, j) / d;
                at(i, j) = m;
                for (int c = j + 1; c <= jlast; ++c) at(i, c) -= m * at(j, c);
            }
        }
        factored_ = true;
    }

    /// Solves A x = b in place (factor() must have run).
    void solve(std::vector<double>& b) const {
        if (!factored_) throw LinearSolveFailure("band LU: solve before factor");
        const int kv = kl_ + ku_;
        for (int j = 0; j < n_; ++j) {
            if (piv_[j] != j) std::swap(b[j], b[piv_[j]]);
            const int ilast = std::min(n_ - 1, j + kl_);
            for (int i = j + 1; i <= ilast; ++i) b[i] -= at(i, j) * b[j];
        }
        for (int j = n_ - 1; j >= 0; --j) {
            b[j] /= at(j, j);
            const int ifirst = std::max(0, j - kv);
            for (int i = ifirst; i < j; ++i) b[i] -= at(i, j) * b[j];
        }
    }

private:
    double& at(int i, int j) {
        return ab_[static_cast<std::size_t>(kl_ + ku_ + i - j) + static_cast<std::size_t>(j) * ldab_];
    }
    const double& at(int i, int j) const {
        return ab_[static_cast<std::size_t>(kl_ + ku_ + i - j) + static_cast<std::size_t>(j) * ldab_];
    }

    int n_, kl_, ku_, ldab_;
    std::vector<double> ab_;
    std::vector<int> piv_;
    bool factored_ = false;
};

/// Conjugate gradients in a weighted inner product <x, y>_w = sum w_i x_i y_i.
/// The operator must be self-adjoint and positive definite with respect to
/// that product. Returns the iteration count.
inline int cg_weighted(const std::function<void(const std::vector<double>&, std::vector<double>&)>& apply,
                       const std::vector<double>& wts, const std::vector<double>& b,
                       std::vector<double>& x, double rel_tol, int max_iters) {
    const std::size_t n = b.size();
    auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += wts[k] * u[k] * v[k];
        return s;
    };
    std::vector<double> r(n), p(n), ap(n);
    x.assign(n, 0.0);
    r = b;
    double rr = dot(r, r);
    const double stop = rel_tol * rel_tol * std::max(rr, 1e-300);
    if (rr <= 1e-300) return 0;
    p = r;
    int it = 0;
    for (; it < max_iters; ++it) {
        std::fill(ap.begin(), ap.end(), 0.0);
        apply(p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0))
            throw LinearSolveFailure("cg: operator not positive definite in the weighted product");
        const double alpha = rr / pap;
        for (std::size_t k = 0; k < n; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        const double rr_new = dot(r, r);
        if (rr_new <= stop) return it + 1;
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * p[k];
    }
    throw LinearSolveFailure("cg: no convergence within iteration budget");
}

} // namespace chrelax
