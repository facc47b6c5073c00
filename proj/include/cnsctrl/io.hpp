#pragma once

#include <charconv>
#include <ostream>
#include <string>
#include <system_error>

#include "cnsctrl/grid.hpp"
#include "cnsctrl/pdhg.hpp"

namespace cnsctrl {

/// Shortest decimal that round-trips the double exactly.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Field export: one row per space-time node, level-major, fixed column order.
inline void write_fields_csv(std::ostream& os, const SpaceTimeField& rho, const SpaceTimeField& m,
                             const SpaceTimeField& a, const SpaceTimeField& phi,
                             const SpaceTimeField& psi) {
    const Grid& g = rho.grid;
    os << "t,x,rho,m,a,phi,psi\n";
    for (int l = 0; l <= g.n_t; ++l) {
        for (int i = 0; i < g.n_x; ++i) {
            os << format_double(g.t(l)) << ',' << format_double(g.x(i)) << ','
               << format_double(rho(l, i)) << ',' << format_double(m(l, i)) << ','
               << format_double(a(l, i)) << ',' << format_double(phi(l, i)) << ','
               << format_double(psi(l, i)) << '\n';
        }
    }
}

/// Trajectory-only export keeps the same schema with zero control/dual columns.
inline void write_fields_csv(std::ostream& os, const SpaceTimeField& rho, const SpaceTimeField& m) {
    SpaceTimeField zero(rho.grid);
    write_fields_csv(os, rho, m, zero, zero, zero);
}

/// Iteration log export. With deterministic set, wall-clock seconds are
/// written as 0 so repeated runs are byte-identical.
inline void write_iterations_csv(std::ostream& os, const IterationLog& log,
                                 bool deterministic = false) {
    os << "iter,L,r1_norm,r2_norm,dprimal,ddual,mass_drift,seconds\n";
    for (const IterationRecord& r : log.records) {
        os << r.iter << ',' << format_double(r.lagrangian) << ',' << format_double(r.r1_norm) << ','
           << format_double(r.r2_norm) << ',' << format_double(r.dprimal) << ','
           << format_double(r.ddual) << ',' << format_double(r.mass_drift) << ','
           << format_double(deterministic ? 0.0 : r.seconds) << '\n';
    }
}

} // namespace cnsctrl
