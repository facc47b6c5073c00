#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cnsctrl/errors.hpp"
#include "cnsctrl/io.hpp"
#include "cnsctrl/presets.hpp"

namespace cnsctrl {

// ---------------------------------------------------------------------------
// Run configuration: flat dotted key-value grammar, one assignment per line,
// '#' comments. Unknown keys are errors. A line "preset = <name>" pulls in a
// built-in preset first; the file's remaining keys override it.
// ---------------------------------------------------------------------------

struct GridConfig {
    int n_x = 64, n_t = 32;
    double x_len = 1.0, t_len = 1.0;
    bool operator==(const GridConfig&) const = default;
};

struct PhysicsConfig {
    double k_p = 0.1, gamma = 2.0;
    std::string mu_mode = "constant"; // constant | power
    double alpha = 0.0;
    double beta = 0.1;
    bool operator==(const PhysicsConfig&) const = default;
};

struct SchemeConfig {
    double c = 0.5, c_prime = 0.5;
    bool control_energy_half = true; // false: unscaled a^2 mu objective
    bool operator==(const SchemeConfig&) const = default;
};

struct CostConfig {
    double c_f = 0.0;
    double f_sign = 1.0; // +1: c_f m^2 is a penalty in the minimization; -1 flips it
    std::string g_kind = "none"; // none | gauss | sine
    double g_center = 0.25, g_amplitude = 0.0, g_width = 100.0, g_frequency = 2.0;
    bool operator==(const CostConfig&) const = default;
};

struct InitFieldConfig {
    std::string kind = "zero"; // riemann | gauss | zero
    double inside = 0.0, outside = 0.0, lo = 0.25, hi = 0.75;          // riemann
    double offset = 0.0, amplitude = 0.0, width = 100.0, center = 0.5; // gauss
    bool operator==(const InitFieldConfig&) const = default;
};

struct PdhgKeys {
    double tau = 0.1, sigma = 0.1;
    double c1 = 1.0, c2 = 1.0, c3 = 1.0;
    long max_iters = 1000;
    int primal_inner_steps = 1;
    double residual_tol = 1e-6;
    double rho_min = 1e-8;
    std::string solver = "spectral";    // spectral | cg
    std::string warm_start = "cold";    // cold | forward (implicit forward solve)
    double cg_tol = 1e-10;
    bool operator==(const PdhgKeys&) const = default;
};

struct ExplicitConfig {
    int n_t = 256;
    double cfl_safety = 0.9;
    bool operator==(const ExplicitConfig&) const = default;
};

struct OutputConfig {
    std::string dir = "out";
    int log_stride = 100;
    bool deterministic = false;
    bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
    std::string mode = "control-solve"; // control-solve | explicit-solve | diagnose | compare
    GridConfig grid;
    PhysicsConfig physics;
    SchemeConfig scheme;
    CostConfig cost;
    InitFieldConfig init_rho;
    InitFieldConfig init_m;
    PdhgKeys pdhg;
    ExplicitConfig explicit_ref;
    OutputConfig output;
    bool operator==(const RunConfig&) const = default;
};

namespace detail {

struct ConfigKey {
    const char* name;
    std::function<void(RunConfig&, const std::string&, int line)> set;
    std::function<std::string(const RunConfig&)> get;
};

inline double parse_double_value(const std::string& v, int line) {
    double out = 0.0;
    const char* b = v.data();
    const char* e = v.data() + v.size();
    auto res = std::from_chars(b, e, out);
    if (res.ec != std::errc() || res.ptr != e) throw ParseError("expected a number, got '" + v + "'", line);
    return out;
}

inline long parse_long_value(const std::string& v, int line) {
    long out = 0;
    const char* b = v.data();
    const char* e = v.data() + v.size();
    auto res = std::from_chars(b, e, out);
    if (res.ec != std::errc() || res.ptr != e) throw ParseError("expected an integer, got '" + v + "'", line);
    return out;
}

inline bool parse_bool_value(const std::string& v, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ParseError("expected true or false, got '" + v + "'", line);
}

inline std::string format_long(long v) { return std::to_string(v); }

inline const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k;

#define CNSCTRL_KEY_DOUBLE(NAME, FIELD)                                                        \
    k.push_back({NAME, [](RunConfig& c, const std::string& v, int line) { c.FIELD = parse_double_value(v, line); }, \
                 [](const RunConfig& c) { return format_double(c.FIELD); }})
#define CNSCTRL_KEY_INT(NAME, FIELD)                                                           \
    k.push_back({NAME, [](RunConfig& c, const std::string& v, int line) { c.FIELD = static_cast<int>(parse_long_value(v, line)); }, \
                 [](const RunConfig& c) { return format_long(c.FIELD); }})
#define CNSCTRL_KEY_LONG(NAME, FIELD)                                                          \
    k.push_back({NAME, [](RunConfig& c, const std::string& v, int line) { c.FIELD = parse_long_value(v, line); }, \
                 [](const RunConfig& c) { return format_long(c.FIELD); }})
#define CNSCTRL_KEY_BOOL(NAME, FIELD)                                                          \
    k.push_back({NAME, [](RunConfig& c, const std::string& v, int line) { c.FIELD = parse_bool_value(v, line); }, \
                 [](const RunConfig& c) { return std::string(c.FIELD ? "true" : "false"); }})
#define CNSCTRL_KEY_STRING(NAME, FIELD)                                                        \
    k.push_back({NAME, [](RunConfig& c, const std::string& v, int) { c.FIELD = v; },           \
                 [](const RunConfig& c) { return c.FIELD; }})

        CNSCTRL_KEY_STRING("mode", mode);
        CNSCTRL_KEY_INT("grid.n_x", grid.n_x);
        CNSCTRL_KEY_INT("grid.n_t", grid.n_t);
        CNSCTRL_KEY_DOUBLE("grid.x_len", grid.x_len);
        CNSCTRL_KEY_DOUBLE("grid.t_len", grid.t_len);
        CNSCTRL_KEY_DOUBLE("physics.k_p", physics.k_p);
        CNSCTRL_KEY_DOUBLE("physics.gamma", physics.gamma);
        CNSCTRL_KEY_STRING("physics.mu_mode", physics.mu_mode);
        CNSCTRL_KEY_DOUBLE("physics.alpha", physics.alpha);
        CNSCTRL_KEY_DOUBLE("physics.beta", physics.beta);
        CNSCTRL_KEY_DOUBLE("scheme.c", scheme.c);
        CNSCTRL_KEY_DOUBLE("scheme.c_prime", scheme.c_prime);
        CNSCTRL_KEY_BOOL("scheme.control_energy_half", scheme.control_energy_half);
        CNSCTRL_KEY_DOUBLE("cost.c_f", cost.c_f);
        CNSCTRL_KEY_DOUBLE("cost.f_sign", cost.f_sign);
        CNSCTRL_KEY_STRING("cost.g_kind", cost.g_kind);
        CNSCTRL_KEY_DOUBLE("cost.g_center", cost.g_center);
        CNSCTRL_KEY_DOUBLE("cost.g_amplitude", cost.g_amplitude);
        CNSCTRL_KEY_DOUBLE("cost.g_width", cost.g_width);
        CNSCTRL_KEY_DOUBLE("cost.g_frequency", cost.g_frequency);
        CNSCTRL_KEY_STRING("init.rho.kind", init_rho.kind);
        CNSCTRL_KEY_DOUBLE("init.rho.inside", init_rho.inside);
        CNSCTRL_KEY_DOUBLE("init.rho.outside", init_rho.outside);
        CNSCTRL_KEY_DOUBLE("init.rho.lo", init_rho.lo);
        CNSCTRL_KEY_DOUBLE("init.rho.hi", init_rho.hi);
        CNSCTRL_KEY_DOUBLE("init.rho.offset", init_rho.offset);
        CNSCTRL_KEY_DOUBLE("init.rho.amplitude", init_rho.amplitude);
        CNSCTRL_KEY_DOUBLE("init.rho.width", init_rho.width);
        CNSCTRL_KEY_DOUBLE("init.rho.center", init_rho.center);
        CNSCTRL_KEY_STRING("init.m.kind", init_m.kind);
        CNSCTRL_KEY_DOUBLE("init.m.inside", init_m.inside);
        CNSCTRL_KEY_DOUBLE("init.m.outside", init_m.outside);
        CNSCTRL_KEY_DOUBLE("init.m.lo", init_m.lo);
        CNSCTRL_KEY_DOUBLE("init.m.hi", init_m.hi);
        CNSCTRL_KEY_DOUBLE("init.m.offset", init_m.offset);
        CNSCTRL_KEY_DOUBLE("init.m.amplitude", init_m.amplitude);
        CNSCTRL_KEY_DOUBLE("init.m.width", init_m.width);
        CNSCTRL_KEY_DOUBLE("init.m.center", init_m.center);
        CNSCTRL_KEY_DOUBLE("pdhg.tau", pdhg.tau);
        CNSCTRL_KEY_DOUBLE("pdhg.sigma", pdhg.sigma);
        CNSCTRL_KEY_DOUBLE("pdhg.c1", pdhg.c1);
        CNSCTRL_KEY_DOUBLE("pdhg.c2", pdhg.c2);
        CNSCTRL_KEY_DOUBLE("pdhg.c3", pdhg.c3);
        CNSCTRL_KEY_LONG("pdhg.max_iters", pdhg.max_iters);
        CNSCTRL_KEY_INT("pdhg.primal_inner_steps", pdhg.primal_inner_steps);
        CNSCTRL_KEY_DOUBLE("pdhg.residual_tol", pdhg.residual_tol);
        CNSCTRL_KEY_DOUBLE("pdhg.rho_min", pdhg.rho_min);
        CNSCTRL_KEY_STRING("pdhg.solver", pdhg.solver);
        CNSCTRL_KEY_STRING("pdhg.warm_start", pdhg.warm_start);
        CNSCTRL_KEY_DOUBLE("pdhg.cg_tol", pdhg.cg_tol);
        CNSCTRL_KEY_INT("explicit.n_t", explicit_ref.n_t);
        CNSCTRL_KEY_DOUBLE("explicit.cfl_safety", explicit_ref.cfl_safety);
        CNSCTRL_KEY_STRING("output.dir", output.dir);
        CNSCTRL_KEY_INT("output.log_stride", output.log_stride);
        CNSCTRL_KEY_BOOL("output.deterministic", output.deterministic);

#undef CNSCTRL_KEY_DOUBLE
#undef CNSCTRL_KEY_INT
#undef CNSCTRL_KEY_LONG
#undef CNSCTRL_KEY_BOOL
#undef CNSCTRL_KEY_STRING
        return k;
    }();
    return keys;
}

inline const ConfigKey* find_key(std::string_view name) {
    for (const auto& k : config_keys()) {
        if (name == k.name) return &k;
    }
    return nullptr;
}

inline std::string trim(std::string_view s) {
    const char* ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

} // namespace detail

struct ParsedConfig {
    RunConfig config;
    std::set<std::string> seen; // keys assigned either by a preset or directly
};

namespace detail {

inline void apply_assignments(std::string_view text, ParsedConfig& out, bool allow_preset);

inline void apply_preset(const std::string& name, ParsedConfig& out, int line) {
    try {
        const PresetInfo& p = preset_info(name);
        apply_assignments(p.text, out, /*allow_preset=*/false);
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what(), line);
    }
}

inline void apply_assignments(std::string_view text, ParsedConfig& out, bool allow_preset) {
    // Two passes so a preset reference takes effect before any override,
    // wherever it appears in the file.
    struct Assignment {
        std::string key, value;
        int line;
    };
    std::vector<Assignment> assignments;
    std::string preset_name;
    int preset_line = 0;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        std::string_view body = raw.substr(0, raw.find('#'));
        std::string stripped = trim(body);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
        std::string key = trim(std::string_view(stripped).substr(0, eq));
        std::string value = trim(std::string_view(stripped).substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", line_no);
        if (value.empty()) throw ParseError("empty value for '" + key + "'", line_no);
        if (key == "preset") {
            if (!allow_preset) throw ParseError("preset reference not allowed here", line_no);
            if (!preset_name.empty()) throw ParseError("duplicate preset reference", line_no);
            preset_name = value;
            preset_line = line_no;
            continue;
        }
        assignments.push_back({std::move(key), std::move(value), line_no});
    }

    if (!preset_name.empty()) apply_preset(preset_name, out, preset_line);
    for (const auto& a : assignments) {
        const ConfigKey* k = find_key(a.key);
        if (!k) throw ParseError("unknown key '" + a.key + "'", a.line);
        k->set(out.config, a.value, a.line);
        out.seen.insert(a.key);
    }
}

} // namespace detail

/// Validates ranges and cross-field requirements; throws ValidationError
/// naming the offending field.
inline void validate_config(const ParsedConfig& parsed) {
    const RunConfig& c = parsed.config;
    auto require_seen = [&](const char* key) {
        if (!parsed.seen.count(key)) throw ValidationError(key, "required field is missing");
    };
    auto fail = [](const char* field, const std::string& msg) -> void {
        throw ValidationError(field, msg);
    };

    require_seen("mode");
    require_seen("grid.n_x");
    require_seen("grid.n_t");
    require_seen("init.rho.kind");
    require_seen("init.m.kind");

    if (c.mode != "control-solve" && c.mode != "explicit-solve" && c.mode != "diagnose" &&
        c.mode != "compare") {
        fail("mode", "must be control-solve, explicit-solve, diagnose or compare");
    }
    if (c.grid.n_x < 3) fail("grid.n_x", "must be >= 3");
    if (c.grid.n_t < 1) fail("grid.n_t", "must be >= 1");
    if (!(c.grid.x_len > 0)) fail("grid.x_len", "must be positive");
    if (!(c.grid.t_len > 0)) fail("grid.t_len", "must be positive");

    if (!(c.physics.k_p > 0)) fail("physics.k_p", "must be positive");
    if (!(c.physics.gamma > 1)) fail("physics.gamma", "must be > 1");
    if (c.physics.mu_mode != "constant" && c.physics.mu_mode != "power") {
        fail("physics.mu_mode", "must be constant or power");
    }
    if (!(c.physics.beta >= 0)) fail("physics.beta", "must be >= 0");

    if (!(c.scheme.c >= 0)) fail("scheme.c", "must be >= 0");
    if (!(c.scheme.c_prime >= 0)) fail("scheme.c_prime", "must be >= 0");

    if (!(c.cost.c_f >= 0)) fail("cost.c_f", "must be >= 0");
    if (c.cost.f_sign != 1.0 && c.cost.f_sign != -1.0) fail("cost.f_sign", "must be 1 or -1");
    if (c.cost.g_kind != "none" && c.cost.g_kind != "gauss" && c.cost.g_kind != "sine") {
        fail("cost.g_kind", "must be none, gauss or sine");
    }
    if (c.cost.g_kind == "gauss" && !(c.cost.g_width > 0)) fail("cost.g_width", "must be positive");
    if (c.cost.g_kind == "sine" && !(c.cost.g_frequency > 0)) fail("cost.g_frequency", "must be positive");

    auto check_init = [&](const InitFieldConfig& f, const char* prefix, bool is_density) {
        const std::string kind_key = std::string(prefix) + ".kind";
        if (f.kind != "riemann" && f.kind != "gauss" && f.kind != "zero") {
            fail(kind_key.c_str(), "must be riemann, gauss or zero");
        }
        if (is_density && f.kind == "zero") fail(kind_key.c_str(), "density must be positive; zero not allowed");
        if (f.kind == "riemann") {
            for (const char* sub : {".inside", ".outside", ".lo", ".hi"}) {
                const std::string key = std::string(prefix) + sub;
                if (!parsed.seen.count(key)) throw ValidationError(key, "required by riemann initial data");
            }
            if (!(f.lo < f.hi)) fail((std::string(prefix) + ".lo").c_str(), "interval must satisfy lo < hi");
        }
        if (f.kind == "gauss") {
            for (const char* sub : {".offset", ".amplitude", ".width"}) {
                const std::string key = std::string(prefix) + sub;
                if (!parsed.seen.count(key)) throw ValidationError(key, "required by gauss initial data");
            }
            if (!(f.width > 0)) fail((std::string(prefix) + ".width").c_str(), "must be positive");
        }
    };
    check_init(c.init_rho, "init.rho", true);
    check_init(c.init_m, "init.m", false);

    if (!(c.pdhg.tau > 0)) fail("pdhg.tau", "must be positive");
    if (!(c.pdhg.sigma > 0)) fail("pdhg.sigma", "must be positive");
    if (c.pdhg.c1 < 0 || c.pdhg.c2 < 0 || c.pdhg.c3 < 0) fail("pdhg.c1", "H-norm weights must be >= 0");
    if (c.pdhg.c1 == 0 && c.pdhg.c2 == 0 && c.pdhg.c3 == 0) fail("pdhg.c1", "H-norm weights must not all be zero");
    if (c.pdhg.max_iters < 0) fail("pdhg.max_iters", "must be >= 0");
    if (c.pdhg.primal_inner_steps < 1) fail("pdhg.primal_inner_steps", "must be >= 1");
    if (!(c.pdhg.rho_min > 0)) fail("pdhg.rho_min", "must be positive");
    if (c.pdhg.solver != "spectral" && c.pdhg.solver != "cg") fail("pdhg.solver", "must be spectral or cg");
    if (c.pdhg.warm_start != "cold" && c.pdhg.warm_start != "forward") {
        fail("pdhg.warm_start", "must be cold or forward");
    }
    if (!(c.pdhg.cg_tol > 0)) fail("pdhg.cg_tol", "must be positive");

    if (c.explicit_ref.n_t < 1) fail("explicit.n_t", "must be >= 1");
    if (!(c.explicit_ref.cfl_safety > 0) || c.explicit_ref.cfl_safety > 1) {
        fail("explicit.cfl_safety", "must be in (0, 1]");
    }
    if ((c.mode == "compare") && c.explicit_ref.n_t % c.grid.n_t != 0) {
        fail("explicit.n_t", "must be an integer multiple of grid.n_t in compare mode");
    }
    if (c.output.log_stride < 1) fail("output.log_stride", "must be >= 1");
    if (c.output.dir.empty()) fail("output.dir", "must not be empty");
}

/// Parses config text (optionally referencing a preset) and validates it.
inline RunConfig parse_config(std::string_view text) {
    ParsedConfig parsed;
    detail::apply_assignments(text, parsed, /*allow_preset=*/true);
    validate_config(parsed);
    return parsed.config;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Canonical serialization: every key, registration order. Parsing the output
/// reproduces the config exactly (shortest round-trip numerals).
inline std::string serialize_config(const RunConfig& config) {
    std::ostringstream os;
    for (const auto& k : detail::config_keys()) {
        os << k.name << " = " << k.get(config) << '\n';
    }
    return os.str();
}

} // namespace cnsctrl
