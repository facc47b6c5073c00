#pragma once

#include <cassert>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace cnsctrl {

/// Uniform periodic grid on [0, x_len) x [0, t_len] with n_x spatial nodes
/// and n_t time steps (n_t + 1 stored levels). Node x_i = i*dx, level t_l = l*dt.
struct Grid {
    int n_x = 0;
    int n_t = 0;
    double x_len = 1.0;
    double t_len = 1.0;

    Grid() = default;
    Grid(int nx, int nt, double xlen = 1.0, double tlen = 1.0)
        : n_x(nx), n_t(nt), x_len(xlen), t_len(tlen) {
        if (n_x < 1 || n_t < 1 || !(x_len > 0.0) || !(t_len > 0.0)) {
            throw std::invalid_argument("grid: n_x, n_t must be >= 1 and lengths positive");
        }
    }

    double dx() const { return x_len / n_x; }
    double dt() const { return t_len / n_t; }
    double x(int i) const { return i * dx(); }
    double t(int l) const { return l * dt(); }
    int n_levels() const { return n_t + 1; }

    bool operator==(const Grid&) const = default;
};

/// Scalar field sampled on the (n_t+1) x n_x space-time grid, level-major so
/// each time level is a contiguous spatial slice. (l, i) = value at t_l, x_i.
struct SpaceTimeField {
    Grid grid;
    std::vector<double> values;

    SpaceTimeField() = default;
    explicit SpaceTimeField(const Grid& g)
        : grid(g), values(static_cast<std::size_t>(g.n_levels()) * g.n_x, 0.0) {}

    double& operator()(int l, int i) { return values[static_cast<std::size_t>(l) * grid.n_x + i]; }
    double operator()(int l, int i) const { return values[static_cast<std::size_t>(l) * grid.n_x + i]; }

    std::span<double> level(int l) {
        return {values.data() + static_cast<std::size_t>(l) * grid.n_x, static_cast<std::size_t>(grid.n_x)};
    }
    std::span<const double> level(int l) const {
        return {values.data() + static_cast<std::size_t>(l) * grid.n_x, static_cast<std::size_t>(grid.n_x)};
    }

    void fill(double v) { values.assign(values.size(), v); }

    bool all_finite() const {
        for (double v : values) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    bool operator==(const SpaceTimeField&) const = default;
};

namespace detail {
inline void require_stencil_size(std::size_t n) {
    if (n < 3) throw std::invalid_argument("stencil requires at least 3 spatial nodes");
}
} // namespace detail

/// Centered first difference on the periodic slice: (u_{i+1} - u_{i-1}) / (2 dx).
inline void d_center(std::span<const double> u, double dx, std::span<double> out) {
    const std::size_t n = u.size();
    detail::require_stencil_size(n);
    assert(out.size() == n && out.data() != u.data());
    const double s = 1.0 / (2.0 * dx);
    out[0] = (u[1] - u[n - 1]) * s;
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (u[i + 1] - u[i - 1]) * s;
    out[n - 1] = (u[0] - u[n - 2]) * s;
}

/// Second difference on the periodic slice: (u_{i+1} - 2 u_i + u_{i-1}) / dx^2.
inline void laplacian(std::span<const double> u, double dx, std::span<double> out) {
    const std::size_t n = u.size();
    detail::require_stencil_size(n);
    assert(out.size() == n && out.data() != u.data());
    const double s = 1.0 / (dx * dx);
    out[0] = (u[1] - 2.0 * u[0] + u[n - 1]) * s;
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * s;
    out[n - 1] = (u[0] - 2.0 * u[n - 1] + u[n - 2]) * s;
}

/// Conservative variable-coefficient diffusion with face-averaged coefficient:
///   out_i = [ a_{i+1/2} (u_{i+1} - u_i) - a_{i-1/2} (u_i - u_{i-1}) ] / dx^2,
/// a_{i+1/2} = (a_i + a_{i+1}) / 2, periodic. Symmetric in (u, out) as a
/// bilinear form; reduces to laplacian() for a == 1.
inline void div_avg_flux(std::span<const double> a, std::span<const double> u, double dx,
                         std::span<double> out) {
    const std::size_t n = u.size();
    detail::require_stencil_size(n);
    if (a.size() != n) throw std::invalid_argument("div_avg_flux: slice size mismatch");
    assert(out.size() == n && out.data() != u.data() && out.data() != a.data());
    const double s = 1.0 / (dx * dx);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ip = (i + 1 == n) ? 0 : i + 1;
        const std::size_t im = (i == 0) ? n - 1 : i - 1;
        const double a_right = 0.5 * (a[i] + a[ip]);
        const double a_left = 0.5 * (a[im] + a[i]);
        out[i] = (a_right * (u[ip] - u[i]) - a_left * (u[i] - u[im])) * s;
    }
}

/// Face-averaged product of one-sided gradients,
///   out_i = [ (u_{i+1}-u_i)(v_{i+1}-v_i) + (u_i-u_{i-1})(v_i-v_{i-1}) ] / (2 dx^2),
/// the exact derivative of sum_j v_j div_avg_flux(a, u)_j with respect to a_i
/// (up to sign). Collocation of du/dx * dv/dx at the nodes.
inline void face_gradient_product(std::span<const double> u, std::span<const double> v, double dx,
                                  std::span<double> out) {
    const std::size_t n = u.size();
    detail::require_stencil_size(n);
    if (v.size() != n) throw std::invalid_argument("face_gradient_product: slice size mismatch");
    assert(out.size() == n);
    const double s = 1.0 / (2.0 * dx * dx);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ip = (i + 1 == n) ? 0 : i + 1;
        const std::size_t im = (i == 0) ? n - 1 : i - 1;
        out[i] = ((u[ip] - u[i]) * (v[ip] - v[i]) + (u[i] - u[im]) * (v[i] - v[im])) * s;
    }
}

// Allocating conveniences, used by tests and cold paths.
inline std::vector<double> d_center(std::span<const double> u, double dx) {
    std::vector<double> out(u.size());
    d_center(u, dx, out);
    return out;
}
inline std::vector<double> laplacian(std::span<const double> u, double dx) {
    std::vector<double> out(u.size());
    laplacian(u, dx, out);
    return out;
}
inline std::vector<double> div_avg_flux(std::span<const double> a, std::span<const double> u, double dx) {
    std::vector<double> out(u.size());
    div_avg_flux(a, u, dx, out);
    return out;
}

} // namespace cnsctrl
