#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "cnsctrl/app.hpp"
#include "cnsctrl/diagnostics.hpp"
#include "cnsctrl/pdhg.hpp"

using namespace cnsctrl;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

PhysicsSpec basic_physics() {
    PhysicsSpec p;
    p.pressure = {0.1, 2.0};
    p.viscosity = {ViscosityLaw::Mode::Constant, 0.0};
    p.beta = 0.1;
    return p;
}

ControlState bumpy_state(const Grid& g, const PhysicsSpec& physics, std::mt19937& rng) {
    std::uniform_real_distribution<double> d(-0.3, 0.3);
    std::vector<double> rho0(g.n_x), m0(g.n_x);
    for (int i = 0; i < g.n_x; ++i) {
        const double x = double(i) / g.n_x;
        rho0[i] = 1.0 + 0.4 * std::sin(2 * kPi * x);
        m0[i] = 0.3 * std::cos(2 * kPi * x);
    }
    ControlState s = ControlState::cold_start(g, rho0, m0, physics);
    for (int l = 1; l <= g.n_t; ++l) {
        for (int i = 0; i < g.n_x; ++i) {
            s.rho(l, i) += d(rng) * 0.2;
            s.m(l, i) += d(rng);
            s.a(l, i) = d(rng);
        }
    }
    for (int l = 0; l < g.n_t; ++l) {
        for (int i = 0; i < g.n_x; ++i) {
            s.phi(l, i) = d(rng);
            s.psi(l, i) = d(rng);
        }
    }
    return s;
}

} // namespace

TEST_CASE("extrapolate is 2*current - previous", "[pdhg]") {
    Grid g(4, 1);
    SpaceTimeField cur(g), prev(g);
    cur.values = {1, 2, 0, 0, 0, 0, 0, 0};
    prev.values = {3, 0, 0, 0, 0, 0, 0, 0};
    SpaceTimeField out = extrapolate(cur, prev);
    CHECK(out.values[0] == -1.0);
    CHECK(out.values[1] == 4.0);

    SpaceTimeField same = extrapolate(cur, cur);
    CHECK(same == cur);

    prev.fill(0.0);
    SpaceTimeField doubled = extrapolate(cur, prev);
    for (std::size_t k = 0; k < cur.values.size(); ++k) {
        CHECK(doubled.values[k] == 2.0 * cur.values[k]);
    }
}

TEST_CASE("primal step is a fixed point at zero gradient", "[pdhg]") {
    Grid g(8, 3);
    PhysicsSpec physics = basic_physics();
    std::vector<double> rho0(8, 1.2), m0(8, 0.0);
    ControlState s = ControlState::cold_start(g, rho0, m0, physics);
    PdhgConfig cfg;
    cfg.tau = 1.0;
    PdhgSolver solver(SchemeSpec{g, 0.5, 0.5, 0.5}, physics, cfg);
    ControlState before = s;
    solver.primal_step(s, s.phi, s.psi);
    CHECK(s == before);
}

TEST_CASE("primal step shrinks the control toward zero with zero duals", "[pdhg]") {
    // With zero extrapolated duals, mu = 1 and no cost terms the a-update is
    // a <- a (1 - tau dx dt); rho and m stay put at a constant state.
    Grid g(8, 2, 1.0, 0.2);
    PhysicsSpec physics = basic_physics();
    std::vector<double> rho0(8, 1.0), m0(8, 0.0);
    ControlState s = ControlState::cold_start(g, rho0, m0, physics);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    SpaceTimeField a0(g);
    for (int l = 1; l <= g.n_t; ++l) {
        for (int i = 0; i < g.n_x; ++i) {
            s.a(l, i) = d(rng);
            a0(l, i) = s.a(l, i);
        }
    }
    PdhgConfig cfg;
    cfg.tau = 40.0;
    PdhgSolver solver(SchemeSpec{g, 0.5, 0.5, 0.5}, physics, cfg);
    SpaceTimeField zero_duals(g);
    const double factor = 1.0 - cfg.tau * g.dx() * g.dt();
    const int steps = 30;
    for (int k = 0; k < steps; ++k) solver.primal_step(s, zero_duals, zero_duals);
    const double expected = std::pow(factor, steps);
    for (int l = 1; l <= g.n_t; ++l) {
        for (int i = 0; i < g.n_x; ++i) {
            CHECK(s.a(l, i) == Approx(a0(l, i) * expected).margin(1e-12));
            CHECK(s.rho(l, i) == Approx(1.0).margin(1e-14));
            CHECK(s.m(l, i) == Approx(0.0).margin(1e-14));
        }
    }
}

TEST_CASE("primal step clamps the density", "[pdhg]") {
    Grid g(8, 2);
    PhysicsSpec physics = basic_physics();
    physics.terminal_cost.g.assign(g.n_x, 50.0); // strong downward push on rho
    std::vector<double> rho0(8, 0.5), m0(8, 0.0);
    ControlState s = ControlState::cold_start(g, rho0, m0, physics);
    PdhgConfig cfg;
    cfg.tau = 5000.0;
    cfg.rho_min = 1e-3;
    PdhgSolver solver(SchemeSpec{g, 0.5, 0.5, 0.5}, physics, cfg);
    solver.primal_step(s, s.phi, s.psi);
    CHECK(s.min_rho() >= cfg.rho_min);
    CHECK(s.rho(g.n_t, 0) == Approx(cfg.rho_min)); // the push was far below the floor
}

TEST_CASE("dual step satisfies the H-norm optimality relation", "[pdhg]") {
    Grid g(12, 5, 1.0, 0.5);
    PhysicsSpec physics = basic_physics();
    std::mt19937 rng(17);
    ControlState s = bumpy_state(g, physics, rng);

    for (DualSolverKind kind : {DualSolverKind::Spectral, DualSolverKind::ConjugateGradient}) {
        PdhgConfig cfg;
        cfg.sigma = 2.5;
        cfg.hnorm = {1.0, 1.0, 1.0, 1e-8};
        cfg.dual_solver = kind;
        SchemeSpec spec{g, 0.4, 0.4, 0.5};
        PdhgSolver solver(spec, physics, cfg);

        ControlState before = s;
        solver.dual_step(s);

        HNormOperator op(g, cfg.hnorm);
        const std::size_t n = op.size();
        std::vector<double> dphi(n), adphi(n);
        for (std::size_t k = 0; k < n; ++k) dphi[k] = s.phi.values[k] - before.phi.values[k];
        op.apply(dphi, adphi);
        const double w = cfg.sigma * g.dx() * g.dt();
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double rhs = w * solver.r1().values[k];
            num += (adphi[k] - rhs) * (adphi[k] - rhs);
            den += rhs * rhs;
        }
        CHECK(std::sqrt(num) <= 1e-8 * std::sqrt(den));
        // Terminal level untouched.
        for (int i = 0; i < g.n_x; ++i) CHECK(s.phi(g.n_t, i) == before.phi(g.n_t, i));
        s = before;
    }
}

TEST_CASE("dual step leaves duals unchanged at zero residuals", "[pdhg]") {
    Grid g(16, 4, 1.0, 0.2);
    PhysicsSpec physics = basic_physics();
    SchemeSpec spec{g, 0.5, 0.5, 0.5};
    std::vector<double> rho0(g.n_x), m0(g.n_x, 0.0);
    for (int i = 0; i < g.n_x; ++i) {
        rho0[i] = 1.0 + 0.3 * std::sin(2 * kPi * i / g.n_x);
    }
    SpaceTimeField rho, m;
    solve_forward_implicit(rho0, m0, spec, physics, rho, m);
    ControlState s = ControlState::from_trajectory(rho, m, physics);
    PdhgConfig cfg;
    PdhgSolver solver(spec, physics, cfg);
    ControlState before = s;
    solver.dual_step(s);
    double worst = 0.0;
    for (std::size_t k = 0; k < s.phi.values.size(); ++k) {
        worst = std::max(worst, std::abs(s.phi.values[k] - before.phi.values[k]));
        worst = std::max(worst, std::abs(s.psi.values[k] - before.psi.values[k]));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("zero iterations return the initial state unchanged", "[pdhg]") {
    Grid g(8, 2);
    PhysicsSpec physics = basic_physics();
    std::vector<double> rho0(8, 1.0), m0(8, 0.1);
    ControlState s = ControlState::cold_start(g, rho0, m0, physics);
    PdhgConfig cfg;
    cfg.max_iters = 0;
    PdhgSolver solver(SchemeSpec{g, 0.5, 0.5, 0.5}, physics, cfg);
    SolveResult r = solver.solve(s);
    CHECK(r.status == SolveStatus::Completed);
    CHECK(r.iterations == 0);
    CHECK(r.state == s);
}

TEST_CASE("degenerate warm start is a fixed point of the iteration", "[pdhg]") {
    // No costs, duals zero, (rho, m) solving the implicit equations: 100
    // iterations keep the control and the duals at the noise floor.
    Grid g(24, 8, 1.0, 0.2);
    PhysicsSpec physics = basic_physics();
    SchemeSpec spec{g, 0.5, 0.5, 0.5};
    std::vector<double> rho0(g.n_x), m0(g.n_x);
    for (int i = 0; i < g.n_x; ++i) {
        const double x = double(i) / g.n_x;
        rho0[i] = (0.25 < x && x < 0.75) ? 2.0 : 1.0;
        m0[i] = (0.25 < x && x < 0.75) ? 1.0 : 0.5;
    }
    SpaceTimeField rho, m;
    solve_forward_implicit(rho0, m0, spec, physics, rho, m);
    ControlState s = ControlState::from_trajectory(rho, m, physics);

    PdhgConfig cfg;
    cfg.tau = 100.0;
    cfg.sigma = 100.0;
    cfg.hnorm = {1.0, 1.0, 1.0, 1e-8};
    cfg.max_iters = 100;
    cfg.residual_tol = 0.0;
    cfg.log_stride = 100;
    PdhgSolver solver(spec, physics, cfg);
    SolveResult r = solver.solve(std::move(s));
    CHECK(r.status == SolveStatus::Completed);
    double worst_a = 0.0, worst_dual = 0.0;
    for (double v : r.state.a.values) worst_a = std::max(worst_a, std::abs(v));
    for (double v : r.state.phi.values) worst_dual = std::max(worst_dual, std::abs(v));
    for (double v : r.state.psi.values) worst_dual = std::max(worst_dual, std::abs(v));
    CHECK(worst_a <= 1e-8);
    CHECK(worst_dual <= 1e-8);
}

TEST_CASE("solver reports divergence with the log so far", "[pdhg]") {
    Grid g(16, 4, 1.0, 0.2);
    PhysicsSpec physics = basic_physics();
    std::vector<double> rho0(g.n_x), m0(g.n_x);
    for (int i = 0; i < g.n_x; ++i) {
        const double x = double(i) / g.n_x;
        rho0[i] = (0.25 < x && x < 0.75) ? 2.0 : 1.0;
        m0[i] = (0.25 < x && x < 0.75) ? 1.0 : 0.5;
    }
    ControlState s = ControlState::cold_start(g, rho0, m0, physics);
    PdhgConfig cfg;
    cfg.tau = 1e9; // hopeless step size
    cfg.sigma = 1e9;
    cfg.max_iters = 50;
    cfg.log_stride = 1;
    PdhgSolver solver(SchemeSpec{g, 0.5, 0.5, 0.5}, physics, cfg);
    SolveResult r = solver.solve(std::move(s));
    CHECK(r.status == SolveStatus::Diverged);
    CHECK(!r.message.empty());
    CHECK(r.iterations < 50);
}

TEST_CASE("residual-based stop returns converged", "[pdhg]") {
    // Warm-started degenerate problem sits at the fixed point, so the first
    // combined residual is already below any loose tolerance.
    Grid g(12, 3, 1.0, 0.1);
    PhysicsSpec physics = basic_physics();
    SchemeSpec spec{g, 0.5, 0.5, 0.5};
    std::vector<double> rho0(g.n_x, 1.0), m0(g.n_x, 0.2);
    SpaceTimeField rho, m;
    solve_forward_implicit(rho0, m0, spec, physics, rho, m);
    ControlState s = ControlState::from_trajectory(rho, m, physics);
    PdhgConfig cfg;
    cfg.tau = 10.0;
    cfg.sigma = 10.0;
    cfg.residual_tol = 1e-6;
    cfg.max_iters = 50;
    PdhgSolver solver(spec, physics, cfg);
    SolveResult r = solver.solve(std::move(s));
    CHECK(r.status == SolveStatus::Converged);
    CHECK(r.iterations <= 2);
}

TEST_CASE("two identical solves are bitwise identical", "[pdhg]") {
    RunConfig cfg = parse_config("preset = example1\n");
    cfg.pdhg.max_iters = 40;
    const Grid g = make_grid(cfg);
    const PhysicsSpec physics = make_physics(cfg, g);
    const SchemeSpec spec = make_scheme(cfg, g);
    const InitialData init = make_initial_data(cfg, g);

    auto run_once = [&]() {
        PdhgSolver solver(spec, physics, make_pdhg_config(cfg));
        return solver.solve(ControlState::cold_start(g, init.rho0, init.m0, physics));
    };
    SolveResult r1 = run_once();
    SolveResult r2 = run_once();
    CHECK(r1.state == r2.state);
    REQUIRE(r1.log.records.size() == r2.log.records.size());
    for (std::size_t k = 0; k < r1.log.records.size(); ++k) {
        CHECK(r1.log.records[k].lagrangian == r2.log.records[k].lagrangian);
        CHECK(r1.log.records[k].r1_norm == r2.log.records[k].r1_norm);
    }
}

TEST_CASE("combined residual trends down over decades on the presets", "[pdhg][slow]") {
    // Weak monotonicity: residual at K below its value at K/10.
    for (const char* preset : {"example1", "example2a", "example3a"}) {
        RunConfig cfg = parse_config(std::string("preset = ") + preset + "\n");
        cfg.pdhg.max_iters = 1200;
        cfg.output.log_stride = 120;
        const Grid g = make_grid(cfg);
        const PhysicsSpec physics = make_physics(cfg, g);
        PdhgSolver solver(make_scheme(cfg, g), physics, make_pdhg_config(cfg));
        const InitialData init = make_initial_data(cfg, g);
        SolveResult r = solver.solve(ControlState::cold_start(g, init.rho0, init.m0, physics));
        REQUIRE(r.status == SolveStatus::Completed);
        auto combined = [](const IterationRecord& rec) {
            return rec.r1_norm + rec.r2_norm + rec.dprimal + rec.ddual;
        };
        const IterationRecord* at_tenth = nullptr;
        for (const auto& rec : r.log.records) {
            if (rec.iter >= cfg.pdhg.max_iters / 10) {
                at_tenth = &rec;
                break;
            }
        }
        REQUIRE(at_tenth != nullptr);
        INFO(preset);
        CHECK(combined(r.log.back()) <= combined(*at_tenth));
    }
}
