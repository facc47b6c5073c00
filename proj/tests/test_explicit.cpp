#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "cnsctrl/explicit_scheme.hpp"

using namespace cnsctrl;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

ExplicitRunSpec example1_spec(int n_t) {
    PhysicsSpec p;
    p.pressure = {0.1, 2.0};
    p.viscosity = {ViscosityLaw::Mode::Constant, 0.0};
    p.beta = 0.1;
    return ExplicitRunSpec{SchemeSpec{Grid(64, n_t, 1.0, 0.2), 0.5, 0.5, 0.5}, p, 0.9};
}

void example1_data(const Grid& g, std::vector<double>& rho0, std::vector<double>& m0) {
    rho0.assign(g.n_x, 0.0);
    m0.assign(g.n_x, 0.0);
    for (int i = 0; i < g.n_x; ++i) {
        const double x = g.x(i);
        rho0[i] = (0.25 < x && x < 0.75) ? 2.0 : 1.0;
        m0[i] = (0.25 < x && x < 0.75) ? 1.0 : 0.5;
    }
}

/// Straight-line transcription of one forward step, written independently of
/// the library stencils (its own wrap arithmetic throughout).
void reference_step(const std::vector<double>& rho, const std::vector<double>& m, double dx,
                    double dt, double c, double cp, double beta, double k_p,
                    std::vector<double>& rho_next, std::vector<double>& m_next) {
    const int n = static_cast<int>(rho.size());
    rho_next.assign(n, 0.0);
    m_next.assign(n, 0.0);
    auto wrap = [&](int i) { return (i % n + n) % n; };
    for (int i = 0; i < n; ++i) {
        const int ip = wrap(i + 1), im = wrap(i - 1);
        const double dc_m = (m[ip] - m[im]) / (2.0 * dx);
        const double lap_rho = (rho[ip] - 2.0 * rho[i] + rho[im]) / (dx * dx);
        rho_next[i] = rho[i] - dt * (dc_m - c * dx * lap_rho);

        auto q = [&](int j) { return m[j] * m[j] / rho[j] + k_p * rho[j] * rho[j]; };
        const double dc_q = (q(ip) - q(im)) / (2.0 * dx);
        auto w = [&](int j) { return m[j] / rho[j]; };
        const double visc = ((w(ip) - w(i)) - (w(i) - w(im))) / (dx * dx); // mu = 1
        const double lap_m = (m[ip] - 2.0 * m[i] + m[im]) / (dx * dx);
        m_next[i] = m[i] - dt * (dc_q - beta * visc - cp * dx * lap_m);
    }
}

} // namespace

TEST_CASE("constant state is a fixed point of the explicit step", "[explicit]") {
    ExplicitRunSpec spec = example1_spec(256);
    const int n = 64;
    std::vector<double> rho(n, 1.4), m(n, 0.0), rn(n), mn(n);
    step_explicit(rho, m, spec, rn, mn);
    for (int i = 0; i < n; ++i) {
        CHECK(rn[i] == Approx(1.4).margin(1e-15));
        CHECK(mn[i] == Approx(0.0).margin(1e-15));
    }
}

TEST_CASE("one explicit step matches the independent transcription", "[explicit]") {
    ExplicitRunSpec spec = example1_spec(256);
    const Grid& g = spec.scheme.grid;
    std::vector<double> rho0, m0, rn(g.n_x), mn(g.n_x), rref, mref;
    example1_data(g, rho0, m0);
    step_explicit(rho0, m0, spec, rn, mn);
    reference_step(rho0, m0, g.dx(), g.dt(), 0.5, 0.5, 0.1, 0.1, rref, mref);
    for (int i = 0; i < g.n_x; ++i) {
        CHECK(rn[i] == Approx(rref[i]).epsilon(1e-13));
        CHECK(mn[i] == Approx(mref[i]).epsilon(1e-13));
    }
}

TEST_CASE("explicit step conserves mass and momentum to round-off", "[explicit]") {
    ExplicitRunSpec spec = example1_spec(256);
    const Grid& g = spec.scheme.grid;
    std::vector<double> rho, m, rn(g.n_x), mn(g.n_x);
    example1_data(g, rho, m);
    double mass0 = 0.0, mom0 = 0.0;
    for (int i = 0; i < g.n_x; ++i) {
        mass0 += rho[i];
        mom0 += m[i];
    }
    for (int step = 0; step < 20; ++step) {
        step_explicit(rho, m, spec, rn, mn, step);
        rho = rn;
        m = mn;
    }
    double mass = 0.0, mom = 0.0;
    for (int i = 0; i < g.n_x; ++i) {
        mass += rho[i];
        mom += m[i];
    }
    CHECK(mass == Approx(mass0).epsilon(1e-13));
    CHECK(mom == Approx(mom0).margin(1e-11));
}

TEST_CASE("cfl report closed forms", "[explicit]") {
    ExplicitRunSpec spec = example1_spec(256);
    const int n = 16;
    std::vector<double> rho(n, 1.0), m(n, 0.0);
    CflReport rep = check_cfl(rho, m, spec);
    CHECK(rep.max_speed == Approx(std::sqrt(0.2)));
    CHECK(rep.dt_max == Approx(0.9 * spec.scheme.grid.dx() / std::sqrt(0.2)));

    m.assign(n, 1.0);
    rep = check_cfl(rho, m, spec);
    CHECK(rep.max_speed == Approx(1.0 + std::sqrt(0.2)));

    // Vanishing pressure and momentum: no waves, unbounded advective dt.
    ExplicitRunSpec still = spec;
    still.physics.pressure.k_p = 1e-300;
    still.physics.beta = 0.0;
    still.scheme.c = 0.0;
    still.scheme.c_prime = 0.0;
    m.assign(n, 0.0);
    rep = check_cfl(rho, m, still);
    CHECK(rep.max_speed <= 1e-100);
    CHECK(rep.dt_max > 1e100);
    CHECK(std::isinf(rep.dt_max_viscous));
}

TEST_CASE("run_explicit produces the full trajectory with reports", "[explicit]") {
    ExplicitRunSpec spec = example1_spec(256);
    const Grid& g = spec.scheme.grid;
    std::vector<double> rho0, m0;
    example1_data(g, rho0, m0);
    ExplicitTrajectory traj = run_explicit(spec, rho0, m0);
    CHECK(traj.rho.grid == g);
    CHECK(static_cast<int>(traj.entropy.size()) == g.n_levels());
    CHECK(static_cast<int>(traj.min_rho.size()) == g.n_levels());
    for (double v : traj.min_rho) CHECK(v > 0.0);
    for (int i = 0; i < g.n_x; ++i) {
        CHECK(traj.rho(0, i) == rho0[i]);
        CHECK(traj.m(0, i) == m0[i]);
    }
    CHECK_FALSE(traj.cfl_violated_mid_run);
}

TEST_CASE("constant initial data stays constant along the run", "[explicit]") {
    ExplicitRunSpec spec = example1_spec(256);
    std::vector<double> rho0(64, 2.0), m0(64, 0.0);
    ExplicitTrajectory traj = run_explicit(spec, rho0, m0);
    for (double v : traj.rho.values) CHECK(v == Approx(2.0).margin(1e-13));
    for (double v : traj.m.values) CHECK(v == Approx(0.0).margin(1e-13));
}

TEST_CASE("run_explicit rejects a time step above the advective bound", "[explicit]") {
    ExplicitRunSpec spec = example1_spec(4); // dt = 0.05, far above the bound
    std::vector<double> rho0, m0;
    example1_data(spec.scheme.grid, rho0, m0);
    CHECK_THROWS_AS(run_explicit(spec, rho0, m0), CflError);
}

TEST_CASE("run_explicit rejects a time step above the viscous bound", "[explicit]") {
    // Low density background makes beta mu / rho the binding diffusivity.
    PhysicsSpec p;
    p.pressure = {0.1, 2.0};
    p.viscosity = {ViscosityLaw::Mode::Constant, 0.0};
    p.beta = 0.1;
    ExplicitRunSpec spec{SchemeSpec{Grid(64, 512, 1.0, 1.0), 0.5, 0.5, 0.5}, p, 0.9};
    std::vector<double> rho0(64), m0(64, 0.0);
    for (int i = 0; i < 64; ++i) {
        const double x = i / 64.0;
        rho0[i] = 0.1 + 0.9 * std::exp(-100.0 * (x - 0.5) * (x - 0.5));
    }
    CHECK_THROWS_AS(run_explicit(spec, rho0, m0), CflError);
}

TEST_CASE("positivity loss is an error naming the level", "[explicit]") {
    PhysicsSpec p;
    p.pressure = {0.1, 2.0};
    p.viscosity = {ViscosityLaw::Mode::Constant, 0.0};
    p.beta = 0.0;
    ExplicitRunSpec spec{SchemeSpec{Grid(8, 10, 1.0, 1.0), 0.0, 0.0, 0.5}, p, 0.9};
    // A huge momentum divergence drains one cell below zero in a single step.
    std::vector<double> rho(8, 0.01), m{0, 5, 0, -5, 0, 0, 0, 0}, rn(8), mn(8);
    try {
        step_explicit(rho, m, spec, rn, mn, 7);
        FAIL("expected positivity loss");
    } catch (const PositivityError& e) {
        CHECK(e.level() == 8);
    }
}

TEST_CASE("halving dt changes the final state at first order", "[explicit][property]") {
    // Smooth data, short horizon; three-resolution Richardson trend.
    auto final_state = [&](int n_t) {
        PhysicsSpec p;
        p.pressure = {0.1, 2.0};
        p.viscosity = {ViscosityLaw::Mode::Constant, 0.0};
        p.beta = 0.1;
        ExplicitRunSpec spec{SchemeSpec{Grid(32, n_t, 1.0, 0.05), 0.5, 0.5, 0.5}, p, 0.9};
        std::vector<double> rho0(32), m0(32);
        for (int i = 0; i < 32; ++i) {
            rho0[i] = 1.5 + 0.3 * std::sin(2.0 * kPi * i / 32.0);
            m0[i] = 0.2 * std::cos(2.0 * kPi * i / 32.0);
        }
        ExplicitTrajectory traj = run_explicit(spec, rho0, m0);
        std::vector<double> out(traj.rho.level(n_t).begin(), traj.rho.level(n_t).end());
        out.insert(out.end(), traj.m.level(n_t).begin(), traj.m.level(n_t).end());
        return out;
    };
    auto diff = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(s);
    };
    const auto u1 = final_state(64), u2 = final_state(128), u3 = final_state(256);
    const double d12 = diff(u1, u2), d23 = diff(u2, u3);
    const double ratio = d12 / d23;
    CHECK(ratio > 1.5);
    CHECK(ratio < 3.0);
}
