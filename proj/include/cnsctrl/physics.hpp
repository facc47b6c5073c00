#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cnsctrl/grid.hpp"

namespace cnsctrl {

namespace detail {
inline void require_positive_density(double rho) {
    if (!(rho > 0.0)) throw std::domain_error("density must be positive");
}
} // namespace detail

/// Power-law pressure P(rho) = k_p rho^gamma, gamma > 1.
struct PressureLaw {
    double k_p = 0.1;
    double gamma = 2.0;

    double P(double rho) const {
        detail::require_positive_density(rho);
        return gamma == 2.0 ? k_p * rho * rho : k_p * std::pow(rho, gamma);
    }
    double dP(double rho) const {
        detail::require_positive_density(rho);
        return gamma == 2.0 ? 2.0 * k_p * rho : k_p * gamma * std::pow(rho, gamma - 1.0);
    }

    /// Internal-energy potential Phat with Phat'' = P'/rho, normalized so that
    /// Phat and Phat' vanish at rho -> 0 for gamma > 1:
    ///   Phat(rho) = k_p rho^gamma / (gamma - 1).
    double potential(double rho) const {
        detail::require_positive_density(rho);
        const double p = gamma == 2.0 ? rho * rho : std::pow(rho, gamma);
        return k_p * p / (gamma - 1.0);
    }
    double potential_d(double rho) const {
        detail::require_positive_density(rho);
        const double p = gamma == 2.0 ? rho : std::pow(rho, gamma - 1.0);
        return k_p * gamma * p / (gamma - 1.0);
    }
    double potential_dd(double rho) const {
        detail::require_positive_density(rho);
        return gamma == 2.0 ? 2.0 * k_p : k_p * gamma * std::pow(rho, gamma - 2.0);
    }

    bool operator==(const PressureLaw&) const = default;
};

/// Viscosity coefficient mu(rho) = rho^alpha, or identically 1 in constant mode.
struct ViscosityLaw {
    enum class Mode { Constant, Power };

    Mode mode = Mode::Constant;
    double alpha = 0.0;

    double mu(double rho) const {
        if (mode == Mode::Constant) return 1.0;
        detail::require_positive_density(rho);
        if (alpha == 0.0) return 1.0;
        if (alpha == 1.0) return rho;
        return std::pow(rho, alpha);
    }
    double dmu(double rho) const {
        if (mode == Mode::Constant) return 0.0;
        detail::require_positive_density(rho);
        if (alpha == 0.0) return 0.0;
        if (alpha == 1.0) return 1.0;
        return alpha * std::pow(rho, alpha - 1.0);
    }

    bool operator==(const ViscosityLaw&) const = default;
};

/// Quadratic momentum running cost. With sign = +1 the term c_f * int m^2 dx dt
/// is added to the minimized objective (a penalty on large momentum), i.e. the
/// functional F itself is F(rho, m) = -sign * c_f * int m^2 dx. sign = -1 flips it.
struct RunningCostSpec {
    double c_f = 0.0;
    double sign = 1.0;

    double functional_value(std::span<const double> m, double dx) const {
        if (c_f == 0.0) return 0.0;
        double s = 0.0;
        for (double v : m) s += v * v;
        return -sign * c_f * dx * s;
    }

    bool operator==(const RunningCostSpec&) const = default;
};

/// Terminal cost H(rho_1, m_1) = int rho_1(x) g(x) dx; linear in rho_1,
/// independent of m_1. Empty g means H == 0.
struct TerminalCostSpec {
    std::vector<double> g;

    bool is_zero() const { return g.empty(); }

    double value(std::span<const double> rho1, double dx) const {
        if (g.empty()) return 0.0;
        if (g.size() != rho1.size()) throw std::invalid_argument("terminal cost: g size mismatch");
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += rho1[i] * g[i];
        return dx * s;
    }

    bool operator==(const TerminalCostSpec&) const = default;
};

struct PhysicsSpec {
    PressureLaw pressure;
    ViscosityLaw viscosity;
    double beta = 0.1;
    RunningCostSpec running_cost;
    TerminalCostSpec terminal_cost;

    bool operator==(const PhysicsSpec&) const = default;
};

inline double pressure_potential(double rho, const PressureLaw& law) { return law.potential(rho); }

/// Entropy density G(rho, m) = m^2 / (2 rho) + Phat(rho).
inline double entropy_density(double rho, double m, const PressureLaw& law) {
    detail::require_positive_density(rho);
    return m * m / (2.0 * rho) + law.potential(rho);
}

/// Entropy flux Psi(rho, m) = m^3 / (2 rho^2) + Phat'(rho) m.
inline double entropy_flux_density(double rho, double m, const PressureLaw& law) {
    detail::require_positive_density(rho);
    return m * m * m / (2.0 * rho * rho) + law.potential_d(rho) * m;
}

/// Residual of the entropy/entropy-flux compatibility condition
///   G_mm (P' - m^2/rho^2) - G_rhorho - G_mrho * 2m/rho = 0
/// evaluated with the analytic second derivatives of G. Zero (to round-off)
/// for the implemented pair; nonzero for a wrong entropy.
inline double entropy_flux_compatibility_residual(double rho, double m, const PressureLaw& law) {
    detail::require_positive_density(rho);
    const double g_mm = 1.0 / rho;
    const double g_mrho = -m / (rho * rho);
    const double g_rhorho = m * m / (rho * rho * rho) + law.potential_dd(rho);
    return g_mm * (law.dP(rho) - m * m / (rho * rho)) - g_rhorho - g_mrho * 2.0 * m / rho;
}

inline double check_entropy_flux_compatibility(const PressureLaw& law,
                                               std::span<const double> rho,
                                               std::span<const double> m) {
    if (rho.empty() || rho.size() != m.size()) {
        throw std::invalid_argument("compatibility check needs a nonempty matched sample set");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        worst = std::max(worst, std::abs(entropy_flux_compatibility_residual(rho[i], m[i], law)));
    }
    return worst;
}

/// Rectangle-rule total entropy dx * sum_i G(rho_i, m_i).
inline double entropy_total(std::span<const double> rho, std::span<const double> m, double dx,
                            const PressureLaw& law) {
    if (rho.size() != m.size()) throw std::invalid_argument("entropy_total: slice size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) s += entropy_density(rho[i], m[i], law);
    return dx * s;
}

/// Dissipation rate dx * sum_i |D_c(m/rho)_i|^2 mu(rho_i) >= 0.
inline double fisher_information(std::span<const double> rho, std::span<const double> m, double dx,
                                 const ViscosityLaw& visc) {
    if (rho.size() != m.size()) throw std::invalid_argument("fisher_information: slice size mismatch");
    const std::size_t n = rho.size();
    std::vector<double> w(n), dw(n);
    for (std::size_t i = 0; i < n; ++i) {
        detail::require_positive_density(rho[i]);
        w[i] = m[i] / rho[i];
    }
    d_center(w, dx, dw);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += dw[i] * dw[i] * visc.mu(rho[i]);
    return dx * s;
}

/// Hamiltonian of the four-field system on one spatial slice:
///   dx * sum_i [ 1/2 (D_c psi)^2 mu + m D_c phi + (m^2/rho + P)(D_c psi)
///                - beta (D_c psi)(D_c m/rho) mu ] + F(rho, m).
inline double hamiltonian_functional(std::span<const double> rho, std::span<const double> m,
                                     std::span<const double> phi, std::span<const double> psi,
                                     double dx, const PhysicsSpec& physics) {
    const std::size_t n = rho.size();
    if (m.size() != n || phi.size() != n || psi.size() != n) {
        throw std::invalid_argument("hamiltonian_functional: slice size mismatch");
    }
    std::vector<double> w(n), dphi(n), dpsi(n), dw(n);
    for (std::size_t i = 0; i < n; ++i) {
        detail::require_positive_density(rho[i]);
        w[i] = m[i] / rho[i];
    }
    d_center(phi, dx, dphi);
    d_center(psi, dx, dpsi);
    d_center(w, dx, dw);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double mu = physics.viscosity.mu(rho[i]);
        s += 0.5 * dpsi[i] * dpsi[i] * mu + m[i] * dphi[i] +
             (m[i] * w[i] + physics.pressure.P(rho[i])) * dpsi[i] -
             physics.beta * dpsi[i] * dw[i] * mu;
    }
    return dx * s + physics.running_cost.functional_value(m, dx);
}

/// Terminal multiplier values from the first variation of H:
///   phi(T, .) = -g, psi(T, .) = 0.
inline std::pair<std::vector<double>, std::vector<double>>
terminal_dual_conditions(const TerminalCostSpec& spec, int n_x) {
    std::vector<double> phi1(static_cast<std::size_t>(n_x), 0.0);
    std::vector<double> psi1(static_cast<std::size_t>(n_x), 0.0);
    if (!spec.is_zero()) {
        if (spec.g.size() != static_cast<std::size_t>(n_x)) {
            throw std::invalid_argument("terminal_dual_conditions: g size mismatch");
        }
        for (int i = 0; i < n_x; ++i) phi1[i] = -spec.g[i];
    }
    return {std::move(phi1), std::move(psi1)};
}

} // namespace cnsctrl
