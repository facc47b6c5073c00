#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "cnsctrl/errors.hpp"
#include "cnsctrl/grid.hpp"

namespace cnsctrl {

/// Weights of the dual proximal norm ||v||_H^2 = c1 ||grad v||^2 + c2 ||Lap v||^2
/// + c3 ||d_t v||^2, plus the epsilon*I shift that makes the induced operator
/// invertible on its kernel (spatio-temporal constants when c3 or all ci allow it).
struct HNormWeights {
    double c1 = 1.0;
    double c2 = 1.0;
    double c3 = 1.0;
    double epsilon = 1e-8;

    bool operator==(const HNormWeights&) const = default;
};

/// A_H = c1 (-Lap_x) + c2 (Lap_x)^2 + c3 (-D_tt) + eps I acting on the dual
/// fields' free levels 0..n_t-1 (a contiguous prefix of SpaceTimeField storage,
/// level-major). Periodic in space. The time part is the exact Hessian of
/// sum_{l=0}^{n_t-1} (v^{l+1} - v^l)^2 / dt^2 with the pinned terminal level
/// held fixed: Neumann (mirrored) at l = 0, homogeneous Dirichlet coupling at
/// l = n_t - 1. With c3 > 0 this leaves no spatio-temporal constant in the
/// kernel; a mirrored end at l = n_t - 1 would, and the 1/eps response of
/// that mode to any end-to-end mass defect of the iterate makes the coupled
/// primal-dual iteration blow up at practical step sizes.
class HNormOperator {
public:
    HNormOperator(const Grid& grid, const HNormWeights& w)
        : n_x_(grid.n_x), n_d_(grid.n_t), dx_(grid.dx()), dt_(grid.dt()), w_(w) {}

    int levels() const { return n_d_; }
    int n_x() const { return n_x_; }
    std::size_t size() const { return static_cast<std::size_t>(n_d_) * n_x_; }
    const HNormWeights& weights() const { return w_; }

    void apply(std::span<const double> v, std::span<double> out) const {
        const std::size_t n = size();
        if (v.size() != n || out.size() != n) throw std::invalid_argument("HNormOperator: size mismatch");
        scratch_.assign(n, 0.0);
        // Spatial Laplacian of every level.
        for (int l = 0; l < n_d_; ++l) {
            laplacian(v.subspan(static_cast<std::size_t>(l) * n_x_, n_x_), dx_,
                      std::span<double>(scratch_.data() + static_cast<std::size_t>(l) * n_x_, n_x_));
        }
        for (std::size_t k = 0; k < n; ++k) out[k] = -w_.c1 * scratch_[k] + w_.epsilon * v[k];
        if (w_.c2 != 0.0) {
            bilap_.assign(n, 0.0);
            for (int l = 0; l < n_d_; ++l) {
                laplacian(std::span<const double>(scratch_.data() + static_cast<std::size_t>(l) * n_x_, n_x_),
                          dx_,
                          std::span<double>(bilap_.data() + static_cast<std::size_t>(l) * n_x_, n_x_));
            }
            for (std::size_t k = 0; k < n; ++k) out[k] += w_.c2 * bilap_[k];
        }
        if (w_.c3 != 0.0) {
            const double s = w_.c3 / (dt_ * dt_);
            for (int l = 0; l < n_d_; ++l) {
                const double* vc = v.data() + static_cast<std::size_t>(l) * n_x_;
                const double* vm = l == 0 ? vc : vc - n_x_; // mirrored at l = 0
                double* o = out.data() + static_cast<std::size_t>(l) * n_x_;
                if (l == n_d_ - 1) {
                    // ghost level n_t holds the (fixed) terminal update 0
                    for (int i = 0; i < n_x_; ++i) o[i] -= s * (-2.0 * vc[i] + vm[i]);
                } else {
                    const double* vp = vc + n_x_;
                    for (int i = 0; i < n_x_; ++i) o[i] -= s * (vp[i] - 2.0 * vc[i] + vm[i]);
                }
            }
        }
    }

    /// Dense symmetric matrix of the time part, scaled by 1/dt^2 (without c3).
    std::vector<double> time_matrix() const {
        std::vector<double> t(static_cast<std::size_t>(n_d_) * n_d_, 0.0);
        const double s = 1.0 / (dt_ * dt_);
        for (int l = 0; l < n_d_; ++l) {
            // Neumann mirror absorbs one coupling at l = 0; the Dirichlet ghost
            // at the far end keeps the full diagonal.
            const double diag = l == 0 ? 1.0 : 2.0;
            t[static_cast<std::size_t>(l) * n_d_ + l] = diag * s;
            if (l + 1 < n_d_) {
                t[static_cast<std::size_t>(l) * n_d_ + l + 1] = -s;
                t[static_cast<std::size_t>(l + 1) * n_d_ + l] = -s;
            }
        }
        return t;
    }

private:
    int n_x_, n_d_;
    double dx_, dt_;
    HNormWeights w_;
    mutable std::vector<double> scratch_, bilap_;
};

namespace detail {

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix. a is n x n
/// row-major and is destroyed; eigenvectors come back as columns of q.
inline void symmetric_eigen(std::vector<double> a, int n, std::vector<double>& eigenvalues,
                            std::vector<double>& q) {
    q.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) q[static_cast<std::size_t>(i) * n + i] = 1.0;
    auto at = [&](std::vector<double>& m, int r, int c) -> double& {
        return m[static_cast<std::size_t>(r) * n + c];
    };
    double scale = 0.0;
    for (double v : a) scale += v * v;
    const double off_target = scale * 1e-30 + 1e-300;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p) {
            for (int r = p + 1; r < n; ++r) off += at(a, p, r) * at(a, p, r);
        }
        if (off <= off_target) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int r = p + 1; r < n; ++r) {
                const double apq = at(a, p, r);
                if (apq == 0.0) continue;
                const double theta = (at(a, r, r) - at(a, p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = at(a, k, p), akq = at(a, k, r);
                    at(a, k, p) = c * akp - s * akq;
                    at(a, k, r) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = at(a, p, k), aqk = at(a, r, k);
                    at(a, p, k) = c * apk - s * aqk;
                    at(a, r, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double qkp = at(q, k, p), qkq = at(q, k, r);
                    at(q, k, p) = c * qkp - s * qkq;
                    at(q, k, r) = s * qkp + c * qkq;
                }
            }
        }
    }
    eigenvalues.assign(n, 0.0);
    for (int i = 0; i < n; ++i) eigenvalues[i] = a[static_cast<std::size_t>(i) * n + i];
}

} // namespace detail

/// Direct solver for A_H x = b by diagonalization: real trigonometric modes in
/// space (periodic circulant), numeric eigenmodes of the mixed-boundary time
/// operator. Exact up to round-off, cost two small dense transforms per solve.
class SpectralHNormSolver {
public:
    SpectralHNormSolver(const Grid& grid, const HNormWeights& w)
        : n_x_(grid.n_x), n_d_(grid.n_t) {
        build_space_basis(grid.dx());
        detail::symmetric_eigen(HNormOperator(grid, w).time_matrix(), n_d_, lam_t_, q_t_);
        inv_eig_.assign(static_cast<std::size_t>(n_d_) * n_x_, 0.0);
        for (int j = 0; j < n_d_; ++j) {
            for (int k = 0; k < n_x_; ++k) {
                const double lam = w.c1 * lam_x_[k] + w.c2 * lam_x_[k] * lam_x_[k] +
                                   w.c3 * lam_t_[j] + w.epsilon;
                inv_eig_[static_cast<std::size_t>(j) * n_x_ + k] = 1.0 / lam;
            }
        }
    }

    std::size_t size() const { return static_cast<std::size_t>(n_d_) * n_x_; }

    void solve(std::span<const double> b, std::span<double> x) const {
        if (b.size() != size() || x.size() != size()) {
            throw std::invalid_argument("SpectralHNormSolver: size mismatch");
        }
        c1_.assign(size(), 0.0);
        c2_.assign(size(), 0.0);
        // c1 = Qt^T B  (time transform)
        for (int j = 0; j < n_d_; ++j) {
            double* row = c1_.data() + static_cast<std::size_t>(j) * n_x_;
            for (int l = 0; l < n_d_; ++l) {
                const double qt = q_t_[static_cast<std::size_t>(l) * n_d_ + j];
                const double* bl = b.data() + static_cast<std::size_t>(l) * n_x_;
                for (int i = 0; i < n_x_; ++i) row[i] += qt * bl[i];
            }
        }
        // c2 = c1 Qx, scaled by the inverse eigenvalues
        for (int j = 0; j < n_d_; ++j) {
            const double* row = c1_.data() + static_cast<std::size_t>(j) * n_x_;
            double* out = c2_.data() + static_cast<std::size_t>(j) * n_x_;
            for (int i = 0; i < n_x_; ++i) {
                const double ri = row[i];
                const double* qx = q_x_.data() + static_cast<std::size_t>(i) * n_x_;
                for (int k = 0; k < n_x_; ++k) out[k] += ri * qx[k];
            }
            const double* inv = inv_eig_.data() + static_cast<std::size_t>(j) * n_x_;
            for (int k = 0; k < n_x_; ++k) out[k] *= inv[k];
        }
        // back: x = Qt (c2 Qx^T)
        c1_.assign(size(), 0.0);
        for (int j = 0; j < n_d_; ++j) {
            const double* coef = c2_.data() + static_cast<std::size_t>(j) * n_x_;
            double* out = c1_.data() + static_cast<std::size_t>(j) * n_x_;
            for (int i = 0; i < n_x_; ++i) {
                const double* qx = q_x_.data() + static_cast<std::size_t>(i) * n_x_;
                double s = 0.0;
                for (int k = 0; k < n_x_; ++k) s += coef[k] * qx[k];
                out[i] = s;
            }
        }
        std::fill(x.begin(), x.end(), 0.0);
        for (int l = 0; l < n_d_; ++l) {
            double* xl = x.data() + static_cast<std::size_t>(l) * n_x_;
            const double* qt_row = q_t_.data() + static_cast<std::size_t>(l) * n_d_;
            for (int j = 0; j < n_d_; ++j) {
                const double qt = qt_row[j];
                const double* cj = c1_.data() + static_cast<std::size_t>(j) * n_x_;
                for (int i = 0; i < n_x_; ++i) xl[i] += qt * cj[i];
            }
        }
    }

private:
    void build_space_basis(double dx) {
        const int n = n_x_;
        q_x_.assign(static_cast<std::size_t>(n) * n, 0.0);
        lam_x_.assign(n, 0.0);
        const double two_pi = 2.0 * std::numbers::pi;
        int col = 0;
        auto set_col = [&](int k, bool sine) {
            const double norm = std::sqrt(2.0 / n);
            for (int i = 0; i < n; ++i) {
                const double ang = two_pi * k * i / n;
                q_x_[static_cast<std::size_t>(i) * n + col] = norm * (sine ? std::sin(ang) : std::cos(ang));
            }
            lam_x_[col] = (2.0 - 2.0 * std::cos(two_pi * k / n)) / (dx * dx);
            ++col;
        };
        for (int i = 0; i < n; ++i) q_x_[static_cast<std::size_t>(i) * n] = 1.0 / std::sqrt(double(n));
        lam_x_[0] = 0.0;
        col = 1;
        for (int k = 1; 2 * k < n; ++k) {
            set_col(k, false);
            set_col(k, true);
        }
        if (n % 2 == 0) {
            const double norm = 1.0 / std::sqrt(double(n));
            for (int i = 0; i < n; ++i) q_x_[static_cast<std::size_t>(i) * n + col] = (i % 2 == 0 ? norm : -norm);
            lam_x_[col] = 4.0 / (dx * dx);
        }
    }

    int n_x_, n_d_;
    std::vector<double> q_x_, q_t_, lam_x_, lam_t_, inv_eig_;
    mutable std::vector<double> c1_, c2_;
};

/// Plain conjugate gradient on an SPD operator; relative residual tolerance.
/// Returns the iteration count, throws SolverError if the tolerance is not
/// reached within max_iters.
template <typename Apply>
long conjugate_gradient(Apply&& apply_op, std::span<const double> b, std::span<double> x,
                        double rel_tol, long max_iters) {
    const std::size_t n = b.size();
    std::vector<double> r(b.begin(), b.end()), p(b.begin(), b.end()), ap(n, 0.0);
    std::fill(x.begin(), x.end(), 0.0);
    auto dot = [](std::span<const double> u, std::span<const double> v) {
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
        return s;
    };
    const double b_norm2 = dot(b, b);
    if (b_norm2 == 0.0) return 0;
    double r_norm2 = b_norm2;
    const double target2 = rel_tol * rel_tol * b_norm2;
    for (long it = 1; it <= max_iters; ++it) {
        apply_op(std::span<const double>(p), std::span<double>(ap));
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) throw SolverError("conjugate gradient: operator not positive definite");
        const double alpha = r_norm2 / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        const double next2 = dot(r, r);
        if (next2 <= target2) return it;
        const double beta = next2 / r_norm2;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        r_norm2 = next2;
    }
    throw SolverError("conjugate gradient: no convergence within iteration cap");
}

enum class DualSolverKind { Spectral, ConjugateGradient };

/// Facade selecting the A_H solve path. Both paths solve the same SPD system;
/// the spectral one is the default because it is a direct method.
class DualSolver {
public:
    DualSolver(const Grid& grid, const HNormWeights& w, DualSolverKind kind,
               double cg_tol = 1e-10, long cg_max_iters = 0)
        : op_(grid, w), kind_(kind), cg_tol_(cg_tol),
          cg_max_iters_(cg_max_iters > 0 ? cg_max_iters
                                         : 200 * static_cast<long>(grid.n_t) * grid.n_x) {
        if (kind_ == DualSolverKind::Spectral) {
            spectral_.emplace(grid, w);
        }
    }

    const HNormOperator& op() const { return op_; }

    void solve(std::span<const double> b, std::span<double> x) const {
        if (kind_ == DualSolverKind::Spectral) {
            spectral_->solve(b, x);
        } else {
            conjugate_gradient([this](std::span<const double> v, std::span<double> out) { op_.apply(v, out); },
                               b, x, cg_tol_, cg_max_iters_);
        }
    }

private:
    HNormOperator op_;
    DualSolverKind kind_;
    double cg_tol_;
    long cg_max_iters_;
    std::optional<SpectralHNormSolver> spectral_;
};

} // namespace cnsctrl
