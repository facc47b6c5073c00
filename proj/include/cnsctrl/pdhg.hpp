#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "cnsctrl/errors.hpp"
#include "cnsctrl/hnorm.hpp"
#include "cnsctrl/scheme.hpp"

namespace cnsctrl {

/// Primal-dual iteration parameters. tau and sigma multiply the raw partial
/// derivatives of L (which carry the dx dt quadrature weight), matching the
/// dual optimality relation A_H (p_new - p_old) = sigma dx dt R. residual_tol
/// <= 0 disables the early stop and the run goes to max_iters ("completed").
struct PdhgConfig {
    double tau = 0.1;
    double sigma = 0.1;
    HNormWeights hnorm{};
    long max_iters = 1000;
    int primal_inner_steps = 1;
    double residual_tol = 1e-6;
    double rho_min = 1e-8;
    DualSolverKind dual_solver = DualSolverKind::Spectral;
    double cg_tol = 1e-10;
    long cg_max_iters = 0; // 0 = auto
    int log_stride = 1;
};

struct IterationRecord {
    long iter = 0;
    double lagrangian = 0.0;
    double r1_norm = 0.0;
    double r2_norm = 0.0;
    double dprimal = 0.0;
    double ddual = 0.0;
    double mass_drift = 0.0;
    double seconds = 0.0;
};

struct IterationLog {
    std::vector<IterationRecord> records;

    const IterationRecord& back() const { return records.back(); }
    bool empty() const { return records.empty(); }
};

enum class SolveStatus { Converged, Completed, IterationCap, Diverged };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::Completed: return "completed";
        case SolveStatus::IterationCap: return "iteration-cap";
        case SolveStatus::Diverged: return "diverged";
    }
    return "unknown";
}

struct SolveResult {
    ControlState state;
    IterationLog log;
    SolveStatus status = SolveStatus::Completed;
    long iterations = 0;
    std::string message;
};

/// Over-relaxation 2*current - previous on every level; the pinned terminal
/// level is unchanged since both copies agree there.
inline SpaceTimeField extrapolate(const SpaceTimeField& current, const SpaceTimeField& previous) {
    if (!(current.grid == previous.grid)) throw std::invalid_argument("extrapolate: grid mismatch");
    SpaceTimeField out(current.grid);
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        out.values[k] = 2.0 * current.values[k] - previous.values[k];
    }
    return out;
}

namespace detail {

inline double weighted_sq(const SpaceTimeField& f, int level_begin, int level_end) {
    double s = 0.0;
    for (int l = level_begin; l < level_end; ++l) {
        for (double v : f.level(l)) s += v * v;
    }
    return s;
}

} // namespace detail

class PdhgSolver {
public:
    PdhgSolver(const SchemeSpec& spec, const PhysicsSpec& physics, const PdhgConfig& config)
        : spec_(spec), physics_(physics), cfg_(config), grads_(spec.grid),
          r1_(spec.grid), r2_(spec.grid),
          dual_solver_(spec.grid, config.hnorm, config.dual_solver, config.cg_tol,
                       config.cg_max_iters) {
        if (!(cfg_.tau > 0.0) || !(cfg_.sigma > 0.0)) throw std::invalid_argument("pdhg: tau, sigma must be positive");
        if (!(cfg_.rho_min > 0.0)) throw std::invalid_argument("pdhg: rho_min must be positive");
        if (cfg_.max_iters < 0) throw std::invalid_argument("pdhg: max_iters must be >= 0");
        if (cfg_.primal_inner_steps < 1) throw std::invalid_argument("pdhg: primal_inner_steps must be >= 1");
        if (cfg_.hnorm.c1 < 0 || cfg_.hnorm.c2 < 0 || cfg_.hnorm.c3 < 0 ||
            (cfg_.hnorm.c1 == 0 && cfg_.hnorm.c2 == 0 && cfg_.hnorm.c3 == 0)) {
            throw std::invalid_argument("pdhg: H-norm weights must be nonnegative, not all zero");
        }
    }

    const PdhgConfig& config() const { return cfg_; }

    /// Gradient steps on z -> L(z, phi_t, psi_t) + (1/2 tau)||z - z_start||^2
    /// over the free levels of (rho, m, a), starting at the current iterate.
    /// Density is clamped to rho_min after each inner step so the next gradient
    /// evaluation stays in the domain of L.
    void primal_step(ControlState& state, const SpaceTimeField& phi_tilde,
                     const SpaceTimeField& psi_tilde, long iteration = 0) {
        const Grid& g = spec_.grid;
        const double prox_w = g.dx() * g.dt(); // d/dz of (1/2tau)||z - z0||_{L2}^2 = (dxdt/tau)(z - z0)

        if (cfg_.primal_inner_steps > 1) {
            rho_start_.assign(state.rho.values.begin(), state.rho.values.end());
            m_start_.assign(state.m.values.begin(), state.m.values.end());
            a_start_.assign(state.a.values.begin(), state.a.values.end());
        }

        ControlState eval = state; // duals replaced by the extrapolated pair
        eval.phi = phi_tilde;
        eval.psi = psi_tilde;

        for (int step = 0; step < cfg_.primal_inner_steps; ++step) {
            grad_lagrangian(eval, spec_, physics_, grads_, grad_ws_);
            if (!grads_.rho.all_finite() || !grads_.m.all_finite() || !grads_.a.all_finite()) {
                throw DivergenceError("non-finite primal gradient", iteration);
            }
            const std::size_t off = static_cast<std::size_t>(g.n_x); // skip level 0
            const std::size_t count = state.rho.values.size() - off;
            double* rho = eval.rho.values.data() + off;
            double* m = eval.m.values.data() + off;
            double* a = eval.a.values.data() + off;
            const double* grho = grads_.rho.values.data() + off;
            const double* gm = grads_.m.values.data() + off;
            const double* ga = grads_.a.values.data() + off;
            if (step == 0) {
                for (std::size_t k = 0; k < count; ++k) {
                    rho[k] -= cfg_.tau * grho[k];
                    m[k] -= cfg_.tau * gm[k];
                    a[k] -= cfg_.tau * ga[k];
                }
            } else {
                const double* rho0 = rho_start_.data() + off;
                const double* m0 = m_start_.data() + off;
                const double* a0 = a_start_.data() + off;
                for (std::size_t k = 0; k < count; ++k) {
                    rho[k] -= cfg_.tau * grho[k] + prox_w * (rho[k] - rho0[k]);
                    m[k] -= cfg_.tau * gm[k] + prox_w * (m[k] - m0[k]);
                    a[k] -= cfg_.tau * ga[k] + prox_w * (a[k] - a0[k]);
                }
            }
            for (std::size_t k = 0; k < count; ++k) rho[k] = std::max(rho[k], cfg_.rho_min);
        }
        state.rho = std::move(eval.rho);
        state.m = std::move(eval.m);
        state.a = std::move(eval.a);
    }

    /// Exact dual ascent in the H norm: since L is linear in the multipliers,
    /// the proximal argmax solves A_H (p_new - p_old) = sigma * dL/dp, with
    /// dL/dp the dx dt weighted forward residual at the current primals.
    void dual_step(ControlState& state) {
        const Grid& g = spec_.grid;
        const double w = cfg_.sigma * g.dx() * g.dt();
        compute_residuals(state);

        const std::size_t n = dual_solver_.op().size(); // free dual levels 0..n_t-1
        rhs_.assign(n, 0.0);
        upd_.assign(n, 0.0);

        for (std::size_t k = 0; k < n; ++k) rhs_[k] = w * r1_.values[k];
        dual_solver_.solve(rhs_, upd_);
        last_ddual_sq_ = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            state.phi.values[k] += upd_[k];
            last_ddual_sq_ += upd_[k] * upd_[k];
        }

        for (std::size_t k = 0; k < n; ++k) rhs_[k] = w * r2_.values[k];
        dual_solver_.solve(rhs_, upd_);
        for (std::size_t k = 0; k < n; ++k) {
            state.psi.values[k] += upd_[k];
            last_ddual_sq_ += upd_[k] * upd_[k];
        }
    }

    /// Residuals at the current primal iterate (levels 0..n_t-1).
    void compute_residuals(const ControlState& state) {
        detail::LevelScratch& ws = grad_ws_.level;
        for (int l = 0; l < spec_.grid.n_t; ++l) {
            residual_density_level(state.rho.level(l + 1), state.rho.level(l), state.m.level(l + 1),
                                   spec_, r1_.level(l), ws);
            residual_momentum_level(state.rho.level(l + 1), state.m.level(l + 1), state.m.level(l),
                                    state.a.level(l + 1), spec_, physics_, r2_.level(l), ws);
        }
    }

    const SpaceTimeField& r1() const { return r1_; }
    const SpaceTimeField& r2() const { return r2_; }

    SolveResult solve(ControlState state) {
        const Grid& g = spec_.grid;
        const double dxdt = g.dx() * g.dt();
        state.apply_terminal_conditions(physics_);

        SolveResult result;
        SpaceTimeField phi_tilde = state.phi;
        SpaceTimeField psi_tilde = state.psi;
        SpaceTimeField phi_prev(g), psi_prev(g);
        std::vector<double> z_prev;

        const auto t0 = std::chrono::steady_clock::now();
        long k = 0;
        try {
            for (; k < cfg_.max_iters; ++k) {
                phi_prev = state.phi;
                psi_prev = state.psi;
                z_prev.assign(state.rho.values.size() * 3, 0.0);
                std::copy(state.rho.values.begin(), state.rho.values.end(), z_prev.begin());
                std::copy(state.m.values.begin(), state.m.values.end(),
                          z_prev.begin() + state.rho.values.size());
                std::copy(state.a.values.begin(), state.a.values.end(),
                          z_prev.begin() + 2 * state.rho.values.size());

                primal_step(state, phi_tilde, psi_tilde, k);
                dual_step(state); // also refreshes r1_, r2_
                phi_tilde = extrapolate(state.phi, phi_prev);
                psi_tilde = extrapolate(state.psi, psi_prev);

                if (!state.all_finite()) throw DivergenceError("non-finite iterate", k);

                double dprimal_sq = 0.0;
                {
                    const std::size_t sz = state.rho.values.size();
                    for (std::size_t j = 0; j < sz; ++j) {
                        const double d0 = state.rho.values[j] - z_prev[j];
                        const double d1 = state.m.values[j] - z_prev[sz + j];
                        const double d2 = state.a.values[j] - z_prev[2 * sz + j];
                        dprimal_sq += d0 * d0 + d1 * d1 + d2 * d2;
                    }
                }
                const double r1n = std::sqrt(dxdt * detail::weighted_sq(r1_, 0, g.n_t));
                const double r2n = std::sqrt(dxdt * detail::weighted_sq(r2_, 0, g.n_t));
                const double dprimal = std::sqrt(dxdt * dprimal_sq);
                const double ddual = std::sqrt(dxdt * last_ddual_sq_);
                const double combined = r1n + r2n + dprimal + ddual;
                const bool converged = cfg_.residual_tol > 0.0 && combined <= cfg_.residual_tol;
                const bool last = converged || k + 1 == cfg_.max_iters;

                if (k % std::max(1, cfg_.log_stride) == 0 || last) {
                    IterationRecord rec;
                    rec.iter = k + 1;
                    rec.lagrangian = discrete_lagrangian(state, spec_, physics_);
                    rec.r1_norm = r1n;
                    rec.r2_norm = r2n;
                    rec.dprimal = dprimal;
                    rec.ddual = ddual;
                    rec.mass_drift = max_mass_drift(state.rho);
                    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                    result.log.records.push_back(rec);
                }
                if (converged) {
                    result.status = SolveStatus::Converged;
                    result.iterations = k + 1;
                    result.state = std::move(state);
                    return result;
                }
            }
        } catch (const DivergenceError& e) {
            result.status = SolveStatus::Diverged;
            result.iterations = k;
            result.message = e.what();
            result.state = std::move(state);
            return result;
        }
        result.status = cfg_.residual_tol > 0.0 && cfg_.max_iters > 0 ? SolveStatus::IterationCap
                                                                      : SolveStatus::Completed;
        result.iterations = cfg_.max_iters;
        result.state = std::move(state);
        return result;
    }

    double max_mass_drift(const SpaceTimeField& rho) const {
        const Grid& g = spec_.grid;
        const double dx = g.dx();
        double mass0 = 0.0;
        for (double v : rho.level(0)) mass0 += v;
        mass0 *= dx;
        double worst = 0.0;
        for (int l = 1; l <= g.n_t; ++l) {
            double mass = 0.0;
            for (double v : rho.level(l)) mass += v;
            worst = std::max(worst, std::abs(mass * dx - mass0));
        }
        return worst;
    }

private:
    SchemeSpec spec_;
    PhysicsSpec physics_;
    PdhgConfig cfg_;
    LagrangianGradient grads_;
    detail::GradScratch grad_ws_;
    SpaceTimeField r1_, r2_;
    DualSolver dual_solver_;
    std::vector<double> rhs_, upd_, rho_start_, m_start_, a_start_;
    double last_ddual_sq_ = 0.0;
};

} // namespace cnsctrl
