#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "cnsctrl/errors.hpp"
#include "cnsctrl/grid.hpp"
#include "cnsctrl/physics.hpp"
#include "cnsctrl/scheme.hpp"

namespace cnsctrl {

/// Forward explicit run of the uncontrolled system; the reference path for
/// the control solve and for the dissipation diagnostics.
struct ExplicitRunSpec {
    SchemeSpec scheme; // grid plus artificial viscosities; control coefficient unused
    PhysicsSpec physics;
    double cfl_safety = 0.9;
};

struct CflReport {
    double max_speed = 0.0;
    double dt_max = std::numeric_limits<double>::infinity();
    // Forward-Euler bound of the diffusive terms (physical beta mu / rho plus
    // artificial viscosities). The advective bound alone does not keep the
    // scheme stable when beta mu / rho is large.
    double dt_max_viscous = std::numeric_limits<double>::infinity();
};

/// Barotropic wave-speed estimate max(|m/rho| + sqrt(P'(rho))) with the step
/// bound cfl_safety * dx / max_speed, plus the matching parabolic bound.
inline CflReport check_cfl(std::span<const double> rho, std::span<const double> m,
                           const ExplicitRunSpec& spec) {
    CflReport rep;
    const double dx = spec.scheme.grid.dx();
    double max_diffusivity = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        detail::require_positive_density(rho[i]);
        const double speed = std::abs(m[i] / rho[i]) + std::sqrt(spec.physics.pressure.dP(rho[i]));
        rep.max_speed = std::max(rep.max_speed, speed);
        const double nu = spec.physics.beta * spec.physics.viscosity.mu(rho[i]) / rho[i] +
                          spec.scheme.c_prime * dx;
        max_diffusivity = std::max(max_diffusivity, nu);
    }
    max_diffusivity = std::max(max_diffusivity, spec.scheme.c * dx);
    if (rep.max_speed > 0.0) rep.dt_max = spec.cfl_safety * dx / rep.max_speed;
    if (max_diffusivity > 0.0) {
        rep.dt_max_viscous = spec.cfl_safety * dx * dx / (2.0 * max_diffusivity);
    }
    return rep;
}

/// One forward Euler step of the explicit scheme (no control):
///   rho^{l+1} = rho^l - dt [ D_c(m) - c dx Lap(rho) ]
///   m^{l+1}   = m^l   - dt [ D_c(m^2/rho + P) - beta DivFlux(mu, m/rho) - c' dx Lap(m) ].
/// Positivity loss is an error, not a clamp: a reference trajectory must not
/// silently alter the dynamics.
inline void step_explicit(std::span<const double> rho, std::span<const double> m,
                          const ExplicitRunSpec& spec, std::span<double> rho_next,
                          std::span<double> m_next, int level = 0) {
    const std::size_t n = rho.size();
    const Grid& g = spec.scheme.grid;
    const double dx = g.dx();
    const double dt = g.dt();
    std::vector<double> w(n), q(n), mu(n), t1(n), t2(n), flux(n);
    for (std::size_t i = 0; i < n; ++i) {
        detail::require_positive_density(rho[i]);
        w[i] = m[i] / rho[i];
        q[i] = m[i] * w[i] + spec.physics.pressure.P(rho[i]);
        mu[i] = spec.physics.viscosity.mu(rho[i]);
    }
    d_center(m, dx, t1);
    laplacian(rho, dx, t2);
    const double cdx = spec.scheme.c * dx;
    for (std::size_t i = 0; i < n; ++i) rho_next[i] = rho[i] - dt * (t1[i] - cdx * t2[i]);

    d_center(q, dx, t1);
    div_avg_flux(mu, w, dx, flux);
    laplacian(m, dx, t2);
    const double cpdx = spec.scheme.c_prime * dx;
    for (std::size_t i = 0; i < n; ++i) {
        m_next[i] = m[i] - dt * (t1[i] - spec.physics.beta * flux[i] - cpdx * t2[i]);
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (!(rho_next[i] > 0.0)) {
            throw PositivityError("explicit step lost density positivity", level + 1);
        }
    }
}

struct ExplicitTrajectory {
    SpaceTimeField rho, m;
    std::vector<double> min_rho;  // per level
    std::vector<double> entropy;  // per level, the running entropy report
    bool cfl_violated_mid_run = false;
};

/// Full explicit trajectory. Errors out if the initial state already violates
/// the CFL bound; mid-run violations are only flagged.
inline ExplicitTrajectory run_explicit(const ExplicitRunSpec& spec, std::span<const double> rho0,
                                       std::span<const double> m0) {
    const Grid& g = spec.scheme.grid;
    ExplicitTrajectory traj{SpaceTimeField(g), SpaceTimeField(g), {}, {}};
    std::copy(rho0.begin(), rho0.end(), traj.rho.level(0).begin());
    std::copy(m0.begin(), m0.end(), traj.m.level(0).begin());

    const CflReport initial = check_cfl(rho0, m0, spec);
    if (g.dt() > initial.dt_max) {
        throw CflError("explicit run: dt " + std::to_string(g.dt()) + " exceeds CFL bound " +
                       std::to_string(initial.dt_max));
    }
    if (g.dt() > initial.dt_max_viscous) {
        throw CflError("explicit run: dt " + std::to_string(g.dt()) +
                       " exceeds the viscous stability bound " +
                       std::to_string(initial.dt_max_viscous));
    }

    traj.min_rho.reserve(g.n_levels());
    traj.entropy.reserve(g.n_levels());
    auto record = [&](int l) {
        auto r = traj.rho.level(l);
        double mn = r[0];
        for (double v : r) mn = std::min(mn, v);
        traj.min_rho.push_back(mn);
        traj.entropy.push_back(entropy_total(r, traj.m.level(l), g.dx(), spec.physics.pressure));
    };
    record(0);

    for (int l = 0; l < g.n_t; ++l) {
        step_explicit(traj.rho.level(l), traj.m.level(l), spec, traj.rho.level(l + 1),
                      traj.m.level(l + 1), l);
        if (check_cfl(traj.rho.level(l + 1), traj.m.level(l + 1), spec).dt_max < g.dt()) {
            traj.cfl_violated_mid_run = true;
        }
        record(l + 1);
    }
    return traj;
}

} // namespace cnsctrl
