#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cnsctrl {

// The five built-in experiment presets. Values are committed as data: the
// physics and grids define the experiments, while tau/sigma and the H-norm
// weights are tuned per preset (see comments inline).

namespace presets_detail {

inline constexpr std::string_view example1 = R"(# example1: shock-tube style initial data, no cost terms; the control solve
# degenerates to the initial-value problem and is checked against the explicit
# reference on a 16x finer time grid.
mode = compare
grid.n_x = 64
grid.n_t = 16
grid.x_len = 1
grid.t_len = 0.2
explicit.n_t = 256
explicit.cfl_safety = 0.9
physics.k_p = 0.1
physics.gamma = 2
physics.mu_mode = constant
physics.beta = 0.1
scheme.c = 0.5
scheme.c_prime = 0.5
init.rho.kind = riemann
init.rho.inside = 2
init.rho.outside = 1
init.rho.lo = 0.25
init.rho.hi = 0.75
init.m.kind = riemann
init.m.inside = 1
init.m.outside = 0.5
init.m.lo = 0.25
init.m.hi = 0.75
cost.c_f = 0
cost.g_kind = none
# tuned step sizes
pdhg.tau = 900
pdhg.sigma = 900
pdhg.c1 = 1
pdhg.c2 = 0
pdhg.c3 = 1
pdhg.max_iters = 50000
pdhg.residual_tol = 0
pdhg.rho_min = 1e-08
pdhg.solver = spectral
output.log_stride = 500
)";

inline constexpr std::string_view example2a = R"(# example2a: Gaussian density bump, zero momentum, no terminal cost; the
# optimal control is zero and the solve reproduces the uncontrolled flow.
mode = control-solve
grid.n_x = 64
grid.n_t = 32
grid.x_len = 1
grid.t_len = 1
physics.k_p = 0.1
physics.gamma = 2
physics.mu_mode = constant
physics.beta = 0.1
scheme.c = 0.5
scheme.c_prime = 0.5
init.rho.kind = gauss
init.rho.offset = 0.1
init.rho.amplitude = 0.9
init.rho.width = 100
init.rho.center = 0.5
init.m.kind = zero
cost.c_f = 0
cost.g_kind = none
# tuned step sizes
pdhg.tau = 300
pdhg.sigma = 300
pdhg.c1 = 1
pdhg.c2 = 0
pdhg.c3 = 1
pdhg.max_iters = 50000
pdhg.residual_tol = 0
pdhg.rho_min = 1e-08
pdhg.solver = spectral
output.log_stride = 500
)";

inline constexpr std::string_view example2b = R"(# example2b: as example2a plus a terminal cost g2, a negative Gaussian well
# that pulls the terminal density toward x = 0.25.
mode = control-solve
grid.n_x = 64
grid.n_t = 32
grid.x_len = 1
grid.t_len = 1
physics.k_p = 0.1
physics.gamma = 2
physics.mu_mode = constant
physics.beta = 0.1
scheme.c = 0.5
scheme.c_prime = 0.5
init.rho.kind = gauss
init.rho.offset = 0.1
init.rho.amplitude = 0.9
init.rho.width = 100
init.rho.center = 0.5
init.m.kind = zero
cost.c_f = 0
cost.g_kind = gauss
cost.g_center = 0.25
cost.g_amplitude = -0.1
cost.g_width = 100
# tuned step sizes
pdhg.tau = 300
pdhg.sigma = 300
pdhg.c1 = 1
pdhg.c2 = 0
pdhg.c3 = 1
pdhg.max_iters = 50000
pdhg.residual_tol = 0
pdhg.rho_min = 1e-08
pdhg.solver = spectral
output.log_stride = 500
)";

inline constexpr std::string_view example3a = R"(# example3a: density-proportional viscosity, sine terminal cost
# g = 0.1 sin(4 pi x) attracting mass toward x = 3/8 and 7/8; no momentum
# penalty.
mode = control-solve
grid.n_x = 64
grid.n_t = 32
grid.x_len = 1
grid.t_len = 1
physics.k_p = 0.1
physics.gamma = 2
physics.mu_mode = power
physics.alpha = 1
physics.beta = 0.1
scheme.c = 0.1
scheme.c_prime = 0
init.rho.kind = gauss
init.rho.offset = 1
init.rho.amplitude = 1
init.rho.width = 100
init.rho.center = 0.5
init.m.kind = zero
cost.c_f = 0
cost.g_kind = sine
cost.g_amplitude = 0.1
cost.g_frequency = 2
# tuned step sizes
pdhg.tau = 300
pdhg.sigma = 300
pdhg.c1 = 1
pdhg.c2 = 0
pdhg.c3 = 1
pdhg.max_iters = 50000
pdhg.residual_tol = 0
pdhg.rho_min = 1e-08
pdhg.solver = spectral
output.log_stride = 500
)";

inline constexpr std::string_view example3b = R"(# example3b: as example3a plus the quadratic momentum penalty c_F = 2, which
# damps max |m| relative to the unpenalized run.
mode = control-solve
grid.n_x = 64
grid.n_t = 32
grid.x_len = 1
grid.t_len = 1
physics.k_p = 0.1
physics.gamma = 2
physics.mu_mode = power
physics.alpha = 1
physics.beta = 0.1
scheme.c = 0.1
scheme.c_prime = 0
init.rho.kind = gauss
init.rho.offset = 1
init.rho.amplitude = 1
init.rho.width = 100
init.rho.center = 0.5
init.m.kind = zero
cost.c_f = 2
cost.g_kind = sine
cost.g_amplitude = 0.1
cost.g_frequency = 2
# tuned step sizes
pdhg.tau = 300
pdhg.sigma = 300
pdhg.c1 = 1
pdhg.c2 = 0
pdhg.c3 = 1
pdhg.max_iters = 50000
pdhg.residual_tol = 0
pdhg.rho_min = 1e-08
pdhg.solver = spectral
output.log_stride = 500
)";

} // namespace presets_detail

struct PresetInfo {
    std::string_view name;
    std::string_view description;
    std::string_view text;
};

inline constexpr std::array<PresetInfo, 5> kPresets{{
    {"example1",
     "shock-tube initial data, no costs; control solve vs explicit reference at T = 0.2",
     presets_detail::example1},
    {"example2a",
     "Gaussian density bump, terminal cost g1 = 0; degenerates to the uncontrolled flow",
     presets_detail::example2a},
    {"example2b",
     "Gaussian density bump, terminal cost g2 = -0.1 exp(-100 (x - 0.25)^2) concentrating density near x = 0.25",
     presets_detail::example2b},
    {"example3a",
     "mu(rho) = rho, terminal cost g = 0.1 sin(4 pi x), no momentum penalty (c_F = 0)",
     presets_detail::example3a},
    {"example3b",
     "mu(rho) = rho, terminal cost g = 0.1 sin(4 pi x), momentum penalty c_F = 2",
     presets_detail::example3b},
}};

inline const PresetInfo& preset_info(std::string_view name) {
    for (const auto& p : kPresets) {
        if (p.name == name) return p;
    }
    throw std::invalid_argument("unknown preset: " + std::string(name));
}

} // namespace cnsctrl
