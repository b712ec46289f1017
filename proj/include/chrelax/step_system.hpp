#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "chrelax/grid.hpp"
#include "chrelax/linalg.hpp"

namespace chrelax {

/// Linear solver for the coupled per-step system of the implicit scheme and
/// its adjoint. With A = (alpha/dt^2) I - L, B = (tau/dt) I - L + diag(fpp)
/// and c = 1/dt, it solves
///
///   forward:  A x + c y = r1,   -x + B y = r2      (Newton / linearized step)
///   adjoint:  A x -   y = r1,   c x + B y = r2     (transposed step)
///
/// where the adjoint form is the exact transpose of the forward one with
/// respect to the weighted grid inner product (A and B are self-adjoint).
/// In 1D both forms are assembled as one banded matrix over interleaved
/// unknowns and solved directly; in 2D they are reduced to the Schur
/// complement S = A + c B^{-1}, which is self-adjoint positive definite, and
/// solved by conjugate gradients with inner CG solves for B.
class CoupledStepSolver {
public:
    CoupledStepSolver(GridPtr grid, double alpha, double dt, double tau,
                      std::vector<double> fpp, bool adjoint)
        : grid_(std::move(grid)), alpha_(alpha), dt_(dt), tau_(tau),
          fpp_(std::move(fpp)), adjoint_(adjoint) {
        if (grid_->dim() == 1) assemble_band();
    }

    void solve(const std::vector<double>& r1, const std::vector<double>& r2,
               std::vector<double>& x, std::vector<double>& y) const {
        if (grid_->dim() == 1) solve_band(r1, r2, x, y);
        else solve_schur(r1, r2, x, y);
    }

private:
    void assemble_band() {
        const int n = grid_->total_nodes();
        band_ = std::make_unique<BandMatrix>(2 * n, 2, 2);
        const double amass = alpha_ / (dt_ * dt_);
        const double c = 1.0 / dt_;
        int cols[3];
        double vals[3];
        int m;
        for (int i = 0; i < n; ++i) {
            grid_->laplacian_row_1d(i, cols, vals, m);
            // Equation 1 row: A block plus the phi coupling.
            band_->add(2 * i, 2 * i, amass);
            for (int k = 0; k < m; ++k) band_->add(2 * i, 2 * cols[k], -vals[k]);
            band_->add(2 * i, 2 * i + 1, adjoint_ ? -1.0 : c);
            // Equation 2 row: B block plus the mu coupling.
            band_->add(2 * i + 1, 2 * i, adjoint_ ? c : -1.0);
            band_->add(2 * i + 1, 2 * i + 1, tau_ / dt_ + fpp_[i]);
            for (int k = 0; k < m; ++k) band_->add(2 * i + 1, 2 * cols[k] + 1, -vals[k]);
        }
        band_->factor();
    }

    void solve_band(const std::vector<double>& r1, const std::vector<double>& r2,
                    std::vector<double>& x, std::vector<double>& y) const {
        const int n = grid_->total_nodes();
        std::vector<double> b(2 * n);
        for (int i = 0; i < n; ++i) {
            b[2 * i] = r1[i];
            b[2 * i + 1] = r2[i];
        }
        band_->solve(b);
        x.resize(n);
        y.resize(n);
        for (int i = 0; i < n; ++i) {
            x[i] = b[2 * i];
            y[i] = b[2 * i + 1];
        }
    }

    void apply_A(const std::vector<double>& v, std::vector<double>& out) const {
        const double amass = alpha_ / (dt_ * dt_);
        const int n = grid_->total_nodes();
        for (int k = 0; k < n; ++k) out[k] = amass * v[k];
        grid_->add_laplacian(v, out, -1.0);
    }

    void apply_B(const std::vector<double>& v, std::vector<double>& out) const {
        const int n = grid_->total_nodes();
        for (int k = 0; k < n; ++k) out[k] = (tau_ / dt_ + fpp_[k]) * v[k];
        grid_->add_laplacian(v, out, -1.0);
    }

    void solve_B(const std::vector<double>& b, std::vector<double>& x) const {
        // cg_weighted zeroes the output before each apply, so plain assignment
        // inside apply_B is safe here.
        cg_weighted([this](const std::vector<double>& v, std::vector<double>& out) {
                        apply_B(v, out);
                    },
                    grid_->weights(), b, x, 1e-14, 40 * grid_->total_nodes());
    }

    void solve_schur(const std::vector<double>& r1, const std::vector<double>& r2,
                     std::vector<double>& x, std::vector<double>& y) const {
        const int n = grid_->total_nodes();
        const double c = 1.0 / dt_;
        double fmin = fpp_[0];
        for (double v : fpp_) fmin = std::min(fmin, v);
        if (!(tau_ / dt_ + fmin > 0.0))
            throw LinearSolveFailure("step solver: tau/dt + min f''(phi) <= 0; reduce dt");
        auto apply_S = [&](const std::vector<double>& v, std::vector<double>& out) {
            std::vector<double> av(n), bv(n);
            apply_A(v, av);
            solve_B(v, bv);
            for (int k = 0; k < n; ++k) out[k] += av[k] + c * bv[k];
        };
        std::vector<double> rhs(n), t(n);
        solve_B(r2, t);
        if (adjoint_) {
            // (A + c B^{-1}) x = r1 + B^{-1} r2,  y = B^{-1} (r2 - c x)
            for (int k = 0; k < n; ++k) rhs[k] = r1[k] + t[k];
        } else {
            // (A + c B^{-1}) x = r1 - c B^{-1} r2,  y = B^{-1} (r2 + x)
            for (int k = 0; k < n; ++k) rhs[k] = r1[k] - c * t[k];
        }
        x.assign(n, 0.0);
        cg_weighted(apply_S, grid_->weights(), rhs, x, 1e-12, 40 * n);
        std::vector<double> r2mod(n);
        for (int k = 0; k < n; ++k)
            r2mod[k] = adjoint_ ? r2[k] - c * x[k] : r2[k] + x[k];
        y.assign(n, 0.0);
        solve_B(r2mod, y);
    }

    GridPtr grid_;
    double alpha_, dt_, tau_;
    std::vector<double> fpp_;
    bool adjoint_;
    std::unique_ptr<BandMatrix> band_;
};

} // namespace chrelax
