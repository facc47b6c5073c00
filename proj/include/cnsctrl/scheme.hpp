#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "cnsctrl/errors.hpp"
#include "cnsctrl/grid.hpp"
#include "cnsctrl/physics.hpp"

namespace cnsctrl {

/// Discretization parameters of the implicit scheme. c and c_prime are the
/// artificial viscosities of the density and momentum updates;
/// control_energy_coeff multiplies a^2 mu(rho) in the objective (1/2 by
/// default, 1.0 reproduces the unscaled discrete objective).
struct SchemeSpec {
    Grid grid;
    double c = 0.5;
    double c_prime = 0.5;
    double control_energy_coeff = 0.5;

    bool operator==(const SchemeSpec&) const = default;
};

/// The full iterate of the control problem: primal fields (rho, m, a), dual
/// fields (phi, psi) and the fixed initial data. Level 0 of rho/m always holds
/// (rho0, m0); level n_t of phi/psi holds the terminal-condition values and is
/// never a free variable. Level 0 of a is unused and kept at zero.
struct ControlState {
    SpaceTimeField rho, m, a, phi, psi;
    std::vector<double> rho0, m0;

    ControlState() = default;
    explicit ControlState(const Grid& g) : rho(g), m(g), a(g), phi(g), psi(g) {}

    const Grid& grid() const { return rho.grid; }

    void set_initial_data(std::span<const double> r0, std::span<const double> m_init) {
        const int n_x = grid().n_x;
        if (r0.size() != static_cast<std::size_t>(n_x) || m_init.size() != static_cast<std::size_t>(n_x)) {
            throw std::invalid_argument("initial data size mismatch");
        }
        rho0.assign(r0.begin(), r0.end());
        m0.assign(m_init.begin(), m_init.end());
        std::copy(r0.begin(), r0.end(), rho.level(0).begin());
        std::copy(m_init.begin(), m_init.end(), m.level(0).begin());
    }

    void apply_terminal_conditions(const PhysicsSpec& physics) {
        auto [phi1, psi1] = terminal_dual_conditions(physics.terminal_cost, grid().n_x);
        std::copy(phi1.begin(), phi1.end(), phi.level(grid().n_t).begin());
        std::copy(psi1.begin(), psi1.end(), psi.level(grid().n_t).begin());
    }

    /// Constant-in-time replication of the initial data, zero control, and
    /// duals filled with the terminal-condition values at every level (the
    /// exact multipliers of the dynamics-free problem). Zero duals would make
    /// the first primal step kick the terminal density by tau * dx * g before
    /// the multipliers have a chance to balance the terminal cost.
    static ControlState cold_start(const Grid& g, std::span<const double> r0,
                                   std::span<const double> m_init, const PhysicsSpec& physics) {
        ControlState s(g);
        s.set_initial_data(r0, m_init);
        for (int l = 1; l <= g.n_t; ++l) {
            std::copy(r0.begin(), r0.end(), s.rho.level(l).begin());
            std::copy(m_init.begin(), m_init.end(), s.m.level(l).begin());
        }
        auto [phi1, psi1] = terminal_dual_conditions(physics.terminal_cost, g.n_x);
        for (int l = 0; l <= g.n_t; ++l) {
            std::copy(phi1.begin(), phi1.end(), s.phi.level(l).begin());
            std::copy(psi1.begin(), psi1.end(), s.psi.level(l).begin());
        }
        return s;
    }

    /// Warm start from a precomputed (rho, m) trajectory on the same grid.
    static ControlState from_trajectory(const SpaceTimeField& rho_traj, const SpaceTimeField& m_traj,
                                        const PhysicsSpec& physics) {
        if (!(rho_traj.grid == m_traj.grid)) throw std::invalid_argument("trajectory grids differ");
        ControlState s(rho_traj.grid);
        s.rho = rho_traj;
        s.m = m_traj;
        s.rho0.assign(rho_traj.level(0).begin(), rho_traj.level(0).end());
        s.m0.assign(m_traj.level(0).begin(), m_traj.level(0).end());
        s.apply_terminal_conditions(physics);
        return s;
    }

    double min_rho() const {
        double v = rho.values[0];
        for (double r : rho.values) v = std::min(v, r);
        return v;
    }

    bool all_finite() const {
        return rho.all_finite() && m.all_finite() && a.all_finite() && phi.all_finite() &&
               psi.all_finite();
    }

    bool operator==(const ControlState&) const = default;
};

namespace detail {

/// Per-level scratch for residual and gradient sweeps.
struct LevelScratch {
    std::vector<double> w, q, flux, t1, t2, t3, t4, t5;
    void resize(std::size_t n) {
        for (auto* v : {&w, &q, &flux, &t1, &t2, &t3, &t4, &t5}) {
            if (v->size() != n) v->assign(n, 0.0);
        }
    }
};

} // namespace detail

/// Density residual of the implicit step at dual level l (couples levels l and l+1):
///   R1_i^l = (rho_i^{l+1} - rho_i^l)/dt + D_c(m)_i^{l+1} - c dx Lap(rho)_i^{l+1}.
inline void residual_density_level(std::span<const double> rho_next, std::span<const double> rho_prev,
                                   std::span<const double> m_next, const SchemeSpec& spec,
                                   std::span<double> out, detail::LevelScratch& ws) {
    const std::size_t n = rho_next.size();
    ws.resize(n);
    const double dx = spec.grid.dx();
    const double inv_dt = 1.0 / spec.grid.dt();
    d_center(m_next, dx, ws.t1);
    laplacian(rho_next, dx, ws.t2);
    const double cdx = spec.c * dx;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = (rho_next[i] - rho_prev[i]) * inv_dt + ws.t1[i] - cdx * ws.t2[i];
    }
}

/// Momentum residual of the implicit step at dual level l:
///   R2_i^l = (m_i^{l+1} - m_i^l)/dt + D_c(m^2/rho)^{l+1} + D_c(P(rho))^{l+1}
///            + D_c(mu(rho) a)^{l+1} - beta DivFlux(mu(rho^{l+1}), (m/rho)^{l+1})
///            - c' dx Lap(m)^{l+1}.
/// The control enters as the centered difference of the product mu(rho) a.
inline void residual_momentum_level(std::span<const double> rho_next, std::span<const double> m_next,
                                    std::span<const double> m_prev, std::span<const double> a_next,
                                    const SchemeSpec& spec, const PhysicsSpec& physics,
                                    std::span<double> out, detail::LevelScratch& ws) {
    const std::size_t n = rho_next.size();
    ws.resize(n);
    const double dx = spec.grid.dx();
    const double inv_dt = 1.0 / spec.grid.dt();
    const double beta = physics.beta;

    for (std::size_t i = 0; i < n; ++i) {
        detail::require_positive_density(rho_next[i]);
        ws.w[i] = m_next[i] / rho_next[i];
        ws.q[i] = m_next[i] * ws.w[i] + physics.pressure.P(rho_next[i]); // m^2/rho + P
        ws.t5[i] = physics.viscosity.mu(rho_next[i]);
        ws.t4[i] = ws.t5[i] * a_next[i];
    }
    d_center(ws.q, dx, ws.t1);       // D_c(m^2/rho + P)
    d_center(ws.t4, dx, ws.t2);      // D_c(mu a)
    div_avg_flux(ws.t5, ws.w, dx, ws.flux);
    laplacian(m_next, dx, ws.t3);
    const double cpdx = spec.c_prime * dx;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = (m_next[i] - m_prev[i]) * inv_dt + ws.t1[i] + ws.t2[i] - beta * ws.flux[i] -
                 cpdx * ws.t3[i];
    }
}

/// All density residual levels l = 0..n_t-1 (level n_t left zero).
inline SpaceTimeField residual_density(const ControlState& state, const SchemeSpec& spec) {
    SpaceTimeField out(spec.grid);
    detail::LevelScratch ws;
    for (int l = 0; l < spec.grid.n_t; ++l) {
        residual_density_level(state.rho.level(l + 1), state.rho.level(l), state.m.level(l + 1),
                               spec, out.level(l), ws);
    }
    return out;
}

/// All momentum residual levels l = 0..n_t-1 (level n_t left zero).
inline SpaceTimeField residual_momentum(const ControlState& state, const SchemeSpec& spec,
                                        const PhysicsSpec& physics) {
    SpaceTimeField out(spec.grid);
    detail::LevelScratch ws;
    for (int l = 0; l < spec.grid.n_t; ++l) {
        residual_momentum_level(state.rho.level(l + 1), state.m.level(l + 1), state.m.level(l),
                                state.a.level(l + 1), spec, physics, out.level(l), ws);
    }
    return out;
}

/// The discrete saddle-point objective
///   L = dx dt sum_{l>=1} cE a^2 mu(rho) - dt sum_{l>=1} F(rho^l, m^l)
///     + dx sum_i rho_i^{n_t} g_i
///     + dx dt sum_{l=0}^{n_t-1} [ phi^l R1^l + psi^l R2^l ].
inline double discrete_lagrangian(const ControlState& state, const SchemeSpec& spec,
                                  const PhysicsSpec& physics) {
    const Grid& g = spec.grid;
    const int n_x = g.n_x;
    const double dx = g.dx();
    const double dxdt = dx * g.dt();
    const double ce = spec.control_energy_coeff;

    double L = 0.0;
    for (int l = 1; l <= g.n_t; ++l) {
        auto rho = state.rho.level(l);
        auto a = state.a.level(l);
        double s = 0.0;
        for (int i = 0; i < n_x; ++i) s += ce * a[i] * a[i] * physics.viscosity.mu(rho[i]);
        L += dxdt * s;
        L -= g.dt() * physics.running_cost.functional_value(state.m.level(l), dx);
    }
    L += physics.terminal_cost.value(state.rho.level(g.n_t), dx);

    detail::LevelScratch ws;
    std::vector<double> r1(n_x), r2(n_x);
    for (int l = 0; l < g.n_t; ++l) {
        residual_density_level(state.rho.level(l + 1), state.rho.level(l), state.m.level(l + 1),
                               spec, r1, ws);
        residual_momentum_level(state.rho.level(l + 1), state.m.level(l + 1), state.m.level(l),
                                state.a.level(l + 1), spec, physics, r2, ws);
        auto phi = state.phi.level(l);
        auto psi = state.psi.level(l);
        double s = 0.0;
        for (int i = 0; i < n_x; ++i) s += phi[i] * r1[i] + psi[i] * r2[i];
        L += dxdt * s;
    }
    return L;
}

/// Partial derivatives of discrete_lagrangian with respect to every free
/// unknown, stored on full space-time fields: rho/m/a filled on levels
/// 1..n_t, phi/psi on levels 0..n_t-1; fixed levels stay zero. Entries are
/// the raw partials, so each carries the dx dt quadrature weight.
struct LagrangianGradient {
    SpaceTimeField rho, m, a, phi, psi;

    LagrangianGradient() = default;
    explicit LagrangianGradient(const Grid& g) : rho(g), m(g), a(g), phi(g), psi(g) {}

    void zero() {
        for (auto* f : {&rho, &m, &a, &phi, &psi}) f->fill(0.0);
    }

    bool all_finite() const {
        return rho.all_finite() && m.all_finite() && a.all_finite() && phi.all_finite() &&
               psi.all_finite();
    }
};

namespace detail {

struct GradScratch {
    LevelScratch level;
    std::vector<double> mu, dmu, dpsi_d, dphi_d, lap_phi_d, lap_psi_d, flux_psi, fgp, w, r;
    void resize(std::size_t n) {
        level.resize(n);
        for (auto* v : {&mu, &dmu, &dpsi_d, &dphi_d, &lap_phi_d, &lap_psi_d, &flux_psi, &fgp, &w, &r}) {
            if (v->size() != n) v->assign(n, 0.0);
        }
    }
};

} // namespace detail

/// Exact gradient of the discrete objective (discretize-then-optimize). Every
/// term is the hand-differentiated adjoint of the corresponding term in
/// discrete_lagrangian; the pairing is verified against central finite
/// differences in the test suite.
inline void grad_lagrangian(const ControlState& state, const SchemeSpec& spec,
                            const PhysicsSpec& physics, LagrangianGradient& out,
                            detail::GradScratch& ws) {
    const Grid& g = spec.grid;
    const int n_x = g.n_x;
    const int n_t = g.n_t;
    const double dx = g.dx();
    const double dt = g.dt();
    const double dxdt = dx * dt;
    const double inv_dt = 1.0 / dt;
    const double beta = physics.beta;
    const double ce = spec.control_energy_coeff;
    const double cf2 = 2.0 * physics.running_cost.sign * physics.running_cost.c_f;
    const double cdx = spec.c * dx;
    const double cpdx = spec.c_prime * dx;

    out.zero();
    ws.resize(static_cast<std::size_t>(n_x));

    for (int l = 1; l <= n_t; ++l) {
        const int d = l - 1; // multiplier level paired with this state level
        auto rho = state.rho.level(l);
        auto m = state.m.level(l);
        auto a = state.a.level(l);
        auto phi_d = state.phi.level(d);
        auto psi_d = state.psi.level(d);

        for (int i = 0; i < n_x; ++i) {
            detail::require_positive_density(rho[i]);
            ws.w[i] = m[i] / rho[i];
            ws.mu[i] = physics.viscosity.mu(rho[i]);
            ws.dmu[i] = physics.viscosity.dmu(rho[i]);
        }
        d_center(psi_d, dx, ws.dpsi_d);
        d_center(phi_d, dx, ws.dphi_d);
        laplacian(phi_d, dx, ws.lap_phi_d);
        laplacian(psi_d, dx, ws.lap_psi_d);
        div_avg_flux(ws.mu, psi_d, dx, ws.flux_psi);
        face_gradient_product(ws.w, psi_d, dx, ws.fgp);

        auto grho = out.rho.level(l);
        auto gm = out.m.level(l);
        auto ga = out.a.level(l);
        const bool interior = l < n_t;
        auto phi_l = state.phi.level(l); // only read when interior
        auto psi_l = state.psi.level(l);

        for (int i = 0; i < n_x; ++i) {
            ga[i] = dxdt * ws.mu[i] * (2.0 * ce * a[i] - ws.dpsi_d[i]);

            gm[i] = dxdt * (cf2 * m[i] + (psi_d[i] - (interior ? psi_l[i] : 0.0)) * inv_dt -
                            ws.dphi_d[i] - 2.0 * ws.w[i] * ws.dpsi_d[i] -
                            beta / rho[i] * ws.flux_psi[i] - cpdx * ws.lap_psi_d[i]);

            grho[i] = dxdt * (ce * a[i] * a[i] * ws.dmu[i] +
                              (phi_d[i] - (interior ? phi_l[i] : 0.0)) * inv_dt -
                              cdx * ws.lap_phi_d[i] +
                              (ws.w[i] * ws.w[i] - physics.pressure.dP(rho[i])) * ws.dpsi_d[i] -
                              ws.dmu[i] * a[i] * ws.dpsi_d[i] +
                              beta * ws.w[i] / rho[i] * ws.flux_psi[i] +
                              beta * ws.dmu[i] * ws.fgp[i]);
        }
        if (l == n_t && !physics.terminal_cost.is_zero()) {
            for (int i = 0; i < n_x; ++i) grho[i] += dx * physics.terminal_cost.g[i];
        }

        // Multiplier gradients: L is linear in phi and psi, so these are the
        // weighted forward residuals at dual level d.
        residual_density_level(rho, state.rho.level(d), m, spec, ws.r, ws.level);
        auto gphi = out.phi.level(d);
        for (int i = 0; i < n_x; ++i) gphi[i] = dxdt * ws.r[i];
        residual_momentum_level(rho, m, state.m.level(d), a, spec, physics, ws.r, ws.level);
        auto gpsi = out.psi.level(d);
        for (int i = 0; i < n_x; ++i) gpsi[i] = dxdt * ws.r[i];
    }
}

inline LagrangianGradient grad_lagrangian(const ControlState& state, const SchemeSpec& spec,
                                          const PhysicsSpec& physics) {
    LagrangianGradient out(spec.grid);
    detail::GradScratch ws;
    grad_lagrangian(state, spec, physics, out, ws);
    return out;
}

/// Centered difference of psi at every level; diagnostic for the optimality
/// relation a = d(psi)/dx.
inline SpaceTimeField assemble_control_from_dual(const SpaceTimeField& psi) {
    SpaceTimeField a(psi.grid);
    for (int l = 0; l <= psi.grid.n_t; ++l) d_center(psi.level(l), psi.grid.dx(), a.level(l));
    return a;
}

// ---------------------------------------------------------------------------
// Implicit forward solve: march the scheme with a = 0, solving the coupled
// (rho, m) system at each level by Newton with a finite-difference Jacobian.
// Produces trajectories with R1 = R2 = 0 down to round-off, the exact
// stationary point of L for zero cost data.
// ---------------------------------------------------------------------------

namespace detail {

// Dense LU with partial pivoting, in place; solves A x = b for small systems.
inline void lu_factor(std::vector<double>& a, std::vector<int>& piv, int n) {
    piv.resize(n);
    for (int k = 0; k < n; ++k) {
        int p = k;
        double best = std::abs(a[static_cast<std::size_t>(k) * n + k]);
        for (int r = k + 1; r < n; ++r) {
            const double v = std::abs(a[static_cast<std::size_t>(r) * n + k]);
            if (v > best) {
                best = v;
                p = r;
            }
        }
        if (best == 0.0) throw SolverError("implicit step: singular Jacobian");
        piv[k] = p;
        if (p != k) {
            for (int j = 0; j < n; ++j)
                std::swap(a[static_cast<std::size_t>(k) * n + j], a[static_cast<std::size_t>(p) * n + j]);
        }
        const double inv = 1.0 / a[static_cast<std::size_t>(k) * n + k];
        for (int r = k + 1; r < n; ++r) {
            const double f = a[static_cast<std::size_t>(r) * n + k] * inv;
            a[static_cast<std::size_t>(r) * n + k] = f;
            if (f != 0.0) {
                for (int j = k + 1; j < n; ++j)
                    a[static_cast<std::size_t>(r) * n + j] -= f * a[static_cast<std::size_t>(k) * n + j];
            }
        }
    }
}

inline void lu_solve(const std::vector<double>& a, const std::vector<int>& piv,
                     std::vector<double>& b, int n) {
    for (int k = 0; k < n; ++k) {
        if (piv[k] != k) std::swap(b[k], b[piv[k]]);
        for (int r = k + 1; r < n; ++r) b[r] -= a[static_cast<std::size_t>(r) * n + k] * b[k];
    }
    for (int k = n - 1; k >= 0; --k) {
        for (int j = k + 1; j < n; ++j) b[k] -= a[static_cast<std::size_t>(k) * n + j] * b[j];
        b[k] /= a[static_cast<std::size_t>(k) * n + k];
    }
}

} // namespace detail

struct ImplicitSolveOptions {
    double tol = 1e-12;       // max-norm residual target per level
    double stall_tol = 1e-9;  // acceptable residual when the line search hits round-off
    int max_newton = 60;
    int max_bisection_depth = 6; // substep continuation for the initial guess
};

namespace detail {

/// Newton solve of one implicit level with a finite-difference Jacobian and
/// Armijo backtracking on the residual 2-norm. If plain Newton from the given
/// guess fails, the step is re-solved as two half steps to build a better
/// guess (continuation in dt); the half-step results are used only as guesses,
/// so the converged level always satisfies the full-step equations.
class ImplicitStepper {
public:
    ImplicitStepper(const SchemeSpec& spec, const PhysicsSpec& physics,
                    const ImplicitSolveOptions& opts)
        : spec_(spec), physics_(physics), opts_(opts), n_x_(spec.grid.n_x), n_(2 * n_x_),
          zero_a_(static_cast<std::size_t>(n_x_), 0.0), trial_(n_), f0_(n_), f1_(n_), du_(n_),
          jac_(static_cast<std::size_t>(n_) * n_) {}

    /// prev and out are packed (rho, m) level vectors of size 2 n_x.
    void advance(const std::vector<double>& prev, std::vector<double>& out, double dt, int level,
                 int depth) {
        out = prev; // warm guess: previous level
        if (newton(prev, out, dt)) return;
        if (depth <= 0) {
            throw SolverError("implicit step: Newton did not converge at level " +
                              std::to_string(level + 1));
        }
        std::vector<double> mid(n_);
        advance(prev, mid, 0.5 * dt, level, depth - 1);
        advance(mid, out, 0.5 * dt, level, depth - 1);
        if (!newton(prev, out, dt)) {
            throw SolverError("implicit step: Newton did not converge at level " +
                              std::to_string(level + 1));
        }
    }

private:
    void eval(const std::vector<double>& prev, const std::vector<double>& z, double dt,
              std::vector<double>& f) {
        // The level residuals read dt from the grid; evaluate on a local spec
        // whose grid carries the requested dt.
        SchemeSpec s = spec_;
        s.grid = Grid(spec_.grid.n_x, 1, spec_.grid.x_len, dt);
        std::span<const double> r(z.data(), n_x_);
        std::span<const double> mm(z.data() + n_x_, n_x_);
        std::span<const double> rp(prev.data(), n_x_);
        std::span<const double> mp(prev.data() + n_x_, n_x_);
        residual_density_level(r, rp, mm, s, std::span<double>(f.data(), n_x_), ws_);
        residual_momentum_level(r, mm, mp, zero_a_, s, physics_,
                                std::span<double>(f.data() + n_x_, n_x_), ws_);
    }

    static double max_norm(const std::vector<double>& f) {
        double v = 0.0;
        for (double x : f) v = std::max(v, std::abs(x));
        return v;
    }
    static double two_norm(const std::vector<double>& f) {
        double s = 0.0;
        for (double x : f) s += x * x;
        return std::sqrt(s);
    }

    bool newton(const std::vector<double>& prev, std::vector<double>& u, double dt) {
        eval(prev, u, dt, f0_);
        double res = max_norm(f0_);
        int it = 0;
        while (res > opts_.tol && it < opts_.max_newton) {
            for (int j = 0; j < n_; ++j) {
                const double h = 1e-7 * std::max(1.0, std::abs(u[j]));
                const double saved = u[j];
                u[j] = saved + h;
                eval(prev, u, dt, f1_);
                u[j] = saved;
                const double inv_h = 1.0 / h;
                for (int r = 0; r < n_; ++r)
                    jac_[static_cast<std::size_t>(r) * n_ + j] = (f1_[r] - f0_[r]) * inv_h;
            }
            lu_factor(jac_, piv_, n_);
            du_ = f0_;
            lu_solve(jac_, piv_, du_, n_);

            const double merit = two_norm(f0_);
            double step = 1.0;
            bool accepted = false;
            for (int bt = 0; bt < 40 && !accepted; ++bt) {
                bool positive = true;
                for (int j = 0; j < n_x_; ++j) {
                    if (u[j] - step * du_[j] <= 0.0) {
                        positive = false;
                        break;
                    }
                }
                if (positive) {
                    for (int j = 0; j < n_; ++j) trial_[j] = u[j] - step * du_[j];
                    eval(prev, trial_, dt, f1_);
                    if (two_norm(f1_) < merit * (1.0 - 1e-4 * step) || max_norm(f1_) <= opts_.tol) {
                        u.swap(trial_);
                        f0_.swap(f1_);
                        res = max_norm(f0_);
                        accepted = true;
                    }
                }
                step *= 0.5;
            }
            if (!accepted) break; // round-off floor of the residual
            ++it;
        }
        return res <= opts_.tol || res <= opts_.stall_tol;
    }

    SchemeSpec spec_;
    PhysicsSpec physics_;
    ImplicitSolveOptions opts_;
    int n_x_, n_;
    LevelScratch ws_;
    std::vector<double> zero_a_, trial_, f0_, f1_, du_, jac_;
    std::vector<int> piv_;
};

} // namespace detail

/// March the implicit scheme forward with zero control. Throws SolverError if
/// Newton fails to reach the tolerance at some level even with substep
/// continuation of the initial guess.
inline void solve_forward_implicit(std::span<const double> rho0, std::span<const double> m0,
                                   const SchemeSpec& spec, const PhysicsSpec& physics,
                                   SpaceTimeField& rho_out, SpaceTimeField& m_out,
                                   const ImplicitSolveOptions& opts = {}) {
    const Grid& g = spec.grid;
    const int n_x = g.n_x;
    rho_out = SpaceTimeField(g);
    m_out = SpaceTimeField(g);
    std::copy(rho0.begin(), rho0.end(), rho_out.level(0).begin());
    std::copy(m0.begin(), m0.end(), m_out.level(0).begin());

    detail::ImplicitStepper stepper(spec, physics, opts);
    std::vector<double> prev(2 * n_x), next(2 * n_x);
    for (int l = 0; l < g.n_t; ++l) {
        std::copy(rho_out.level(l).begin(), rho_out.level(l).end(), prev.begin());
        std::copy(m_out.level(l).begin(), m_out.level(l).end(), prev.begin() + n_x);
        stepper.advance(prev, next, g.dt(), l, opts.max_bisection_depth);
        std::copy(next.begin(), next.begin() + n_x, rho_out.level(l + 1).begin());
        std::copy(next.begin() + n_x, next.end(), m_out.level(l + 1).begin());
    }
}

} // namespace cnsctrl
