#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cnsctrl/config.hpp"
#include "cnsctrl/diagnostics.hpp"
#include "cnsctrl/explicit_scheme.hpp"
#include "cnsctrl/io.hpp"
#include "cnsctrl/pdhg.hpp"

namespace cnsctrl {

inline constexpr const char* kVersion = "cnsctrl 0.1.0";

// Process exit codes; also recorded in summary.json.
enum class ExitCode : int {
    Ok = 0,
    ConfigError = 1,
    IterationCap = 2,
    Diverged = 3,
    CflViolation = 4,
    IoError = 5,
    PositivityLoss = 6,
};

// ---------------------------------------------------------------------------
// Config -> domain objects
// ---------------------------------------------------------------------------

inline Grid make_grid(const RunConfig& c) {
    return Grid(c.grid.n_x, c.grid.n_t, c.grid.x_len, c.grid.t_len);
}

inline Grid make_explicit_grid(const RunConfig& c) {
    return Grid(c.grid.n_x, c.explicit_ref.n_t, c.grid.x_len, c.grid.t_len);
}

inline std::vector<double> sample_terminal_cost(const CostConfig& cost, const Grid& g) {
    if (cost.g_kind == "none") return {};
    std::vector<double> gvals(static_cast<std::size_t>(g.n_x), 0.0);
    for (int i = 0; i < g.n_x; ++i) {
        const double x = g.x(i);
        if (cost.g_kind == "gauss") {
            const double d = x - cost.g_center;
            gvals[i] = cost.g_amplitude * std::exp(-cost.g_width * d * d);
        } else { // sine
            gvals[i] = cost.g_amplitude *
                       std::sin(2.0 * std::numbers::pi * cost.g_frequency * x / g.x_len);
        }
    }
    return gvals;
}

inline PhysicsSpec make_physics(const RunConfig& c, const Grid& g) {
    PhysicsSpec p;
    p.pressure = PressureLaw{c.physics.k_p, c.physics.gamma};
    p.viscosity.mode =
        c.physics.mu_mode == "constant" ? ViscosityLaw::Mode::Constant : ViscosityLaw::Mode::Power;
    p.viscosity.alpha = c.physics.alpha;
    p.beta = c.physics.beta;
    p.running_cost = RunningCostSpec{c.cost.c_f, c.cost.f_sign};
    p.terminal_cost.g = sample_terminal_cost(c.cost, g);
    return p;
}

inline SchemeSpec make_scheme(const RunConfig& c, const Grid& g) {
    return SchemeSpec{g, c.scheme.c, c.scheme.c_prime, c.scheme.control_energy_half ? 0.5 : 1.0};
}

inline PdhgConfig make_pdhg_config(const RunConfig& c) {
    PdhgConfig p;
    p.tau = c.pdhg.tau;
    p.sigma = c.pdhg.sigma;
    p.hnorm = HNormWeights{c.pdhg.c1, c.pdhg.c2, c.pdhg.c3, 1e-8};
    p.max_iters = c.pdhg.max_iters;
    p.primal_inner_steps = c.pdhg.primal_inner_steps;
    p.residual_tol = c.pdhg.residual_tol;
    p.rho_min = c.pdhg.rho_min;
    p.dual_solver =
        c.pdhg.solver == "cg" ? DualSolverKind::ConjugateGradient : DualSolverKind::Spectral;
    p.cg_tol = c.pdhg.cg_tol;
    p.log_stride = c.output.log_stride;
    return p;
}

inline std::vector<double> sample_initial_field(const InitFieldConfig& f, const Grid& g) {
    std::vector<double> out(static_cast<std::size_t>(g.n_x), 0.0);
    for (int i = 0; i < g.n_x; ++i) {
        const double x = g.x(i);
        if (f.kind == "riemann") {
            out[i] = (f.lo < x && x < f.hi) ? f.inside : f.outside;
        } else if (f.kind == "gauss") {
            const double d = x - f.center;
            out[i] = f.offset + f.amplitude * std::exp(-f.width * d * d);
        } // zero: leave 0
    }
    return out;
}

struct InitialData {
    std::vector<double> rho0, m0;
};

inline InitialData make_initial_data(const RunConfig& c, const Grid& g) {
    InitialData d{sample_initial_field(c.init_rho, g), sample_initial_field(c.init_m, g)};
    for (double r : d.rho0) {
        if (!(r > 0.0)) throw ValidationError("init.rho", "sampled initial density must be positive");
    }
    return d;
}

/// Initial iterate for a control solve: either the plain cold start or a warm
/// start on the uncontrolled implicit forward solution (useful when the
/// transport of mass through low-density regions makes cold transients
/// violent). Both fill the duals with the terminal-condition values.
inline ControlState make_start_state(const RunConfig& c, const Grid& grid, const SchemeSpec& scheme,
                                     const PhysicsSpec& physics, const InitialData& init) {
    if (c.pdhg.warm_start == "forward") {
        SpaceTimeField rho, m;
        solve_forward_implicit(init.rho0, init.m0, scheme, physics, rho, m);
        ControlState s = ControlState::from_trajectory(rho, m, physics);
        auto [phi1, psi1] = terminal_dual_conditions(physics.terminal_cost, grid.n_x);
        for (int l = 0; l <= grid.n_t; ++l) {
            std::copy(phi1.begin(), phi1.end(), s.phi.level(l).begin());
            std::copy(psi1.begin(), psi1.end(), s.psi.level(l).begin());
        }
        return s;
    }
    return ControlState::cold_start(grid, init.rho0, init.m0, physics);
}

/// CNSCTRL_THREADS is an upper bound on worker parallelism. Execution is
/// single-threaded, so any positive value is honored; a malformed value is a
/// config error.
inline int thread_cap_from_env() {
    const char* v = std::getenv("CNSCTRL_THREADS");
    if (!v) return 1;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || n < 1) {
        throw ValidationError("CNSCTRL_THREADS", "must be a positive integer");
    }
    return static_cast<int>(std::min<long>(n, 1));
}

// ---------------------------------------------------------------------------
// Run orchestration
// ---------------------------------------------------------------------------

using json = nlohmann::ordered_json;

namespace detail {

inline json config_echo(const RunConfig& c) {
    json j = json::object();
    for (const auto& k : config_keys()) j[k.name] = k.get(c);
    return j;
}

inline json kkt_json(const KktResiduals& k) {
    return json{{"r_primal_rho", k.r_primal_rho},
                {"r_primal_m", k.r_primal_m},
                {"r_dual_rho", k.r_dual_rho},
                {"r_dual_m", k.r_dual_m},
                {"r_control", k.r_control},
                {"combined", k.combined()}};
}

inline json comparison_json(const ComparisonReport& r) {
    return json{{"rel_l2_rho", r.rel_l2_rho},
                {"rel_l2_m", r.rel_l2_m},
                {"linf_rho", r.linf_rho},
                {"linf_m", r.linf_m}};
}

inline void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fn) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
    fn(os);
    os.flush();
    if (!os) throw std::ios_base::failure("write failed: " + path.string());
}

inline void write_entropy_csv(std::ostream& os, const Grid& g, const EntropyDissipationReport& rep) {
    os << "level,t,entropy,fisher,balance_residual\n";
    for (int l = 0; l < g.n_levels(); ++l) {
        os << l << ',' << format_double(g.t(l)) << ',' << format_double(rep.entropy[l]) << ','
           << format_double(rep.fisher[l]) << ',';
        if (l > 0) os << format_double(rep.balance_residual[l - 1]);
        os << '\n';
    }
}

inline ExitCode status_exit_code(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged:
        case SolveStatus::Completed: return ExitCode::Ok;
        case SolveStatus::IterationCap: return ExitCode::IterationCap;
        case SolveStatus::Diverged: return ExitCode::Diverged;
    }
    return ExitCode::Ok;
}

} // namespace detail

/// Executes one configured run and writes the artifact files into the output
/// directory. Returns the process exit code; every failure is also recorded
/// in summary.json.
inline int run(const RunConfig& config, std::ostream& console) {
    namespace fs = std::filesystem;
    json summary;
    summary["version"] = kVersion;
    summary["mode"] = config.mode;
    summary["deterministic"] = config.output.deterministic;
    ExitCode code = ExitCode::Ok;

    const fs::path out_dir(config.output.dir);
    try {
        fs::create_directories(out_dir);
    } catch (const std::exception& e) {
        console << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::IoError);
    }

    auto finish = [&](ExitCode c) {
        summary["exit_code"] = static_cast<int>(c);
        summary["config"] = detail::config_echo(config);
        try {
            detail::write_file(out_dir / "summary.json",
                               [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
        } catch (const std::exception& e) {
            console << "error: " << e.what() << '\n';
            return static_cast<int>(ExitCode::IoError);
        }
        return static_cast<int>(c);
    };

    try {
        summary["threads"] = thread_cap_from_env();
        const Grid grid = make_grid(config);
        const PhysicsSpec physics = make_physics(config, grid);
        const SchemeSpec scheme = make_scheme(config, grid);
        const InitialData init = make_initial_data(config, grid);

        const bool wants_control = config.mode == "control-solve" || config.mode == "compare";
        const bool wants_explicit = config.mode != "control-solve";

        std::optional<SolveResult> solved;
        if (wants_control) {
            PdhgSolver solver(scheme, physics, make_pdhg_config(config));
            ControlState state = make_start_state(config, grid, scheme, physics, init);
            solved = solver.solve(std::move(state));
            const SolveResult& r = *solved;

            summary["status"] = to_string(r.status);
            summary["iterations"] = r.iterations;
            if (!r.message.empty()) summary["error"] = r.message;
            if (!r.log.empty()) {
                const IterationRecord& last = r.log.back();
                summary["final"] = {{"lagrangian", last.lagrangian},
                                    {"r1_norm", last.r1_norm},
                                    {"r2_norm", last.r2_norm},
                                    {"dprimal", last.dprimal},
                                    {"ddual", last.ddual},
                                    {"combined", last.r1_norm + last.r2_norm + last.dprimal + last.ddual},
                                    {"seconds", config.output.deterministic ? 0.0 : last.seconds}};
            }
            if (r.status != SolveStatus::Diverged) {
                summary["kkt"] = detail::kkt_json(kkt_residuals(r.state, scheme, physics));
                const auto drift = mass_drift(r.state.rho);
                double max_drift = 0.0;
                for (double d : drift) max_drift = std::max(max_drift, std::abs(d));
                double mass0 = 0.0;
                for (double v : r.state.rho.level(0)) mass0 += v;
                SpaceTimeField r1 = residual_density(r.state, scheme);
                summary["mass"] = {{"initial", mass0 * grid.dx()},
                                   {"max_drift", max_drift},
                                   {"r1_bound", mass_drift_bound_from_r1(r1)}};
                auto rep = entropy_dissipation_report(r.state.rho, r.state.m, physics);
                summary["entropy"] = rep.entropy;
            }

            detail::write_file(out_dir / "fields.csv", [&](std::ostream& os) {
                write_fields_csv(os, r.state.rho, r.state.m, r.state.a, r.state.phi, r.state.psi);
            });
            detail::write_file(out_dir / "iterations.csv", [&](std::ostream& os) {
                write_iterations_csv(os, r.log, config.output.deterministic);
            });
            code = detail::status_exit_code(r.status);
        }

        if (wants_explicit) {
            const Grid egrid = config.mode == "explicit-solve" || config.mode == "diagnose"
                                   ? grid
                                   : make_explicit_grid(config);
            ExplicitRunSpec espec{SchemeSpec{egrid, scheme.c, scheme.c_prime,
                                             scheme.control_energy_coeff},
                                  physics, config.explicit_ref.cfl_safety};
            const CflReport cfl = check_cfl(init.rho0, init.m0, espec);
            summary["cfl"] = {{"max_speed", cfl.max_speed},
                              {"dt_max", cfl.dt_max},
                              {"dt_max_viscous", cfl.dt_max_viscous},
                              {"dt", egrid.dt()}};
            ExplicitTrajectory traj = run_explicit(espec, init.rho0, init.m0);

            const auto drift = mass_drift(traj.rho);
            double max_drift = 0.0;
            for (double d : drift) max_drift = std::max(max_drift, std::abs(d));
            double mass0 = 0.0;
            for (double v : traj.rho.level(0)) mass0 += v;
            summary["explicit"] = {{"n_t", egrid.n_t},
                                   {"mass_initial", mass0 * egrid.dx()},
                                   {"mass_max_drift", max_drift},
                                   {"min_rho", *std::min_element(traj.min_rho.begin(), traj.min_rho.end())},
                                   {"cfl_violated_mid_run", traj.cfl_violated_mid_run}};

            if (config.mode == "compare") {
                detail::write_file(out_dir / "fields_explicit.csv", [&](std::ostream& os) {
                    write_fields_csv(os, traj.rho, traj.m);
                });
                const TrajectoryComparison cmp = compare_trajectories(
                    solved->state.rho, solved->state.m, traj.rho, traj.m);
                summary["comparison"] = {{"final", detail::comparison_json(cmp.at_final)},
                                         {"trajectory", detail::comparison_json(cmp.trajectory)}};
            } else {
                detail::write_file(out_dir / "fields.csv", [&](std::ostream& os) {
                    write_fields_csv(os, traj.rho, traj.m);
                });
                auto rep = entropy_dissipation_report(traj.rho, traj.m, physics);
                summary["entropy"] = rep.entropy;
                if (config.mode == "diagnose") {
                    summary["fisher"] = rep.fisher;
                    summary["balance_residual"] = rep.balance_residual;
                    // Entropy / entropy-flux compatibility on a density-momentum sample box.
                    std::vector<double> rs, ms;
                    for (int i = 0; i < 10; ++i) {
                        for (int j = 0; j < 10; ++j) {
                            rs.push_back(0.1 + (3.0 - 0.1) * i / 9.0);
                            ms.push_back(-2.0 + 4.0 * j / 9.0);
                        }
                    }
                    summary["entropy_flux_check"] = {
                        {"max_residual", check_entropy_flux_compatibility(physics.pressure, rs, ms)},
                        {"points", rs.size()}};
                    detail::write_file(out_dir / "entropy.csv", [&](std::ostream& os) {
                        detail::write_entropy_csv(os, egrid, rep);
                    });
                }
            }
        }
    } catch (const CflError& e) {
        summary["error"] = e.what();
        return finish(ExitCode::CflViolation);
    } catch (const PositivityError& e) {
        summary["error"] = e.what();
        return finish(ExitCode::PositivityLoss);
    } catch (const ValidationError& e) {
        summary["error"] = e.what();
        return finish(ExitCode::ConfigError);
    } catch (const std::ios_base::failure& e) {
        summary["error"] = e.what();
        console << "error: " << e.what() << '\n';
        return finish(ExitCode::IoError);
    } catch (const std::exception& e) {
        summary["error"] = e.what();
        return finish(ExitCode::Diverged);
    }

    return finish(code);
}

/// The five built-in presets with one-line descriptions.
inline void list_presets(std::ostream& os) {
    for (const auto& p : kPresets) {
        os << p.name << "  -  " << p.description << '\n';
    }
}

} // namespace cnsctrl
