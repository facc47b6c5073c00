#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "cnsctrl/grid.hpp"
#include "cnsctrl/physics.hpp"
#include "cnsctrl/scheme.hpp"

namespace cnsctrl {

/// Per-level deviation of the discrete mass dx * sum_i rho_i^l from its
/// initial value.
inline std::vector<double> mass_drift(const SpaceTimeField& rho) {
    const Grid& g = rho.grid;
    const double dx = g.dx();
    std::vector<double> drift(g.n_levels(), 0.0);
    double mass0 = 0.0;
    for (double v : rho.level(0)) mass0 += v;
    mass0 *= dx;
    for (int l = 0; l < g.n_levels(); ++l) {
        double mass = 0.0;
        for (double v : rho.level(l)) mass += v;
        drift[l] = mass * dx - mass0;
    }
    return drift;
}

/// A-priori bound on the mass drift of a control iterate: summing the density
/// residual identity over space telescopes the stencils, so
/// |mass^l - mass^0| <= dt * sum_l dx * sum_i |R1_i^l|.
inline double mass_drift_bound_from_r1(const SpaceTimeField& r1) {
    const Grid& g = r1.grid;
    double bound = 0.0;
    for (int l = 0; l < g.n_t; ++l) {
        for (double v : r1.level(l)) bound += std::abs(v);
    }
    return bound * g.dx() * g.dt();
}

struct EntropyDissipationReport {
    std::vector<double> entropy;          // G^l, one per level
    std::vector<double> fisher;           // I^l, one per level
    std::vector<double> balance_residual; // (G^{l+1}-G^l)/dt + beta I^{l+1}, one per step
};

/// Entropy, Fisher information and the discrete dissipation balance along a
/// trajectory. For smooth uncontrolled runs the balance residual shrinks
/// under refinement and the entropy sequence is non-increasing.
inline EntropyDissipationReport entropy_dissipation_report(const SpaceTimeField& rho,
                                                           const SpaceTimeField& m,
                                                           const PhysicsSpec& physics) {
    if (!(rho.grid == m.grid)) throw std::invalid_argument("entropy report: grid mismatch");
    const Grid& g = rho.grid;
    EntropyDissipationReport rep;
    rep.entropy.reserve(g.n_levels());
    rep.fisher.reserve(g.n_levels());
    for (int l = 0; l < g.n_levels(); ++l) {
        rep.entropy.push_back(entropy_total(rho.level(l), m.level(l), g.dx(), physics.pressure));
        rep.fisher.push_back(fisher_information(rho.level(l), m.level(l), g.dx(), physics.viscosity));
    }
    rep.balance_residual.reserve(g.n_t);
    for (int l = 0; l < g.n_t; ++l) {
        rep.balance_residual.push_back((rep.entropy[l + 1] - rep.entropy[l]) / g.dt() +
                                       physics.beta * rep.fisher[l + 1]);
    }
    return rep;
}

/// Norms of the five first-variation blocks of the discrete objective, all
/// divided by the dx dt quadrature weight so the primal blocks coincide
/// exactly with the weighted norms of the forward residuals.
struct KktResiduals {
    double r_primal_rho = 0.0; // dL/dphi block = density residual
    double r_primal_m = 0.0;   // dL/dpsi block = momentum residual
    double r_dual_rho = 0.0;   // dL/drho block
    double r_dual_m = 0.0;     // dL/dm block
    double r_control = 0.0;    // dL/da block, encodes a = d(psi)/dx up to mu

    double combined() const {
        return r_primal_rho + r_primal_m + r_dual_rho + r_dual_m + r_control;
    }
};

inline KktResiduals kkt_residuals(const ControlState& state, const SchemeSpec& spec,
                                  const PhysicsSpec& physics) {
    const Grid& g = spec.grid;
    const double dxdt = g.dx() * g.dt();
    LagrangianGradient grads = grad_lagrangian(state, spec, physics);
    auto weighted = [&](const SpaceTimeField& f) {
        double s = 0.0;
        for (double v : f.values) s += v * v;
        return std::sqrt(dxdt * s) / dxdt;
    };
    KktResiduals r;
    r.r_primal_rho = weighted(grads.phi);
    r.r_primal_m = weighted(grads.psi);
    r.r_dual_rho = weighted(grads.rho);
    r.r_dual_m = weighted(grads.m);
    r.r_control = weighted(grads.a);
    return r;
}

/// Mesh-independent error metrics between two trajectories sharing a spatial
/// grid, at one time slice or accumulated over shared levels.
struct ComparisonReport {
    double rel_l2_rho = 0.0;
    double rel_l2_m = 0.0;
    double linf_rho = 0.0;
    double linf_m = 0.0;
};

struct TrajectoryComparison {
    ComparisonReport at_final;   // final shared time slice
    ComparisonReport trajectory; // all shared time levels
};

/// Restricts the finer-in-time trajectory by subsampling shared levels
/// (both schemes are nodal collocation) and reports relative errors.
inline TrajectoryComparison compare_trajectories(const SpaceTimeField& rho_coarse,
                                                 const SpaceTimeField& m_coarse,
                                                 const SpaceTimeField& rho_fine,
                                                 const SpaceTimeField& m_fine) {
    const Grid& gc = rho_coarse.grid;
    const Grid& gf = rho_fine.grid;
    if (!(rho_coarse.grid == m_coarse.grid) || !(rho_fine.grid == m_fine.grid)) {
        throw std::invalid_argument("compare_trajectories: field grids differ");
    }
    if (gc.n_x != gf.n_x || gc.x_len != gf.x_len || gc.t_len != gf.t_len) {
        throw std::invalid_argument("compare_trajectories: incompatible grids");
    }
    if (gf.n_t % gc.n_t != 0) {
        throw std::invalid_argument("compare_trajectories: fine n_t must be a multiple of coarse n_t");
    }
    const int ratio = gf.n_t / gc.n_t;

    struct Acc {
        double err2 = 0.0, ref2 = 0.0, linf = 0.0;
        void add(std::span<const double> a, std::span<const double> b) {
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double d = a[i] - b[i];
                err2 += d * d;
                ref2 += b[i] * b[i];
                linf = std::max(linf, std::abs(d));
            }
        }
        double rel() const { return ref2 > 0.0 ? std::sqrt(err2 / ref2) : std::sqrt(err2); }
    };

    TrajectoryComparison out;
    Acc fr, fm, tr, tm;
    for (int l = 0; l <= gc.n_t; ++l) {
        tr.add(rho_coarse.level(l), rho_fine.level(l * ratio));
        tm.add(m_coarse.level(l), m_fine.level(l * ratio));
    }
    fr.add(rho_coarse.level(gc.n_t), rho_fine.level(gf.n_t));
    fm.add(m_coarse.level(gc.n_t), m_fine.level(gf.n_t));
    out.at_final = {fr.rel(), fm.rel(), fr.linf, fm.linf};
    out.trajectory = {tr.rel(), tm.rel(), tr.linf, tm.linf};
    return out;
}

} // namespace cnsctrl
