#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cnsctrl/app.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string out_dir;
    long max_iters = -1;
    int log_stride = -1;
    bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "Path to a config file");
    cmd->add_option("--preset", o.preset, "Built-in preset name (see 'presets')");
    cmd->add_option("--out", o.out_dir, "Output directory override");
    cmd->add_option("--max-iters", o.max_iters, "Override pdhg.max_iters");
    cmd->add_option("--log-stride", o.log_stride, "Override output.log_stride");
    cmd->add_flag("--deterministic", o.deterministic, "Byte-stable outputs (zeroed timings)");
}

cnsctrl::RunConfig load_config(const CommonOpts& o) {
    using namespace cnsctrl;
    if (!o.config_path.empty() && !o.preset.empty()) {
        throw ValidationError("--config/--preset", "choose one; a config file can itself say 'preset = ...'");
    }
    if (o.config_path.empty() && o.preset.empty()) {
        throw ValidationError("--config/--preset", "one of them is required");
    }
    RunConfig cfg = o.preset.empty() ? parse_config_file(o.config_path)
                                     : parse_config("preset = " + o.preset + "\n");
    if (!o.out_dir.empty()) cfg.output.dir = o.out_dir;
    if (o.max_iters >= 0) cfg.pdhg.max_iters = o.max_iters;
    if (o.log_stride > 0) cfg.output.log_stride = o.log_stride;
    if (o.deterministic) cfg.output.deterministic = true;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal control of the 1D barotropic compressible Navier-Stokes system"};
    app.require_subcommand(1);

    CommonOpts run_opts;
    CLI::App* run_cmd = app.add_subcommand("run", "Execute a configured run");
    add_common(run_cmd, run_opts);

    CLI::App* presets_cmd = app.add_subcommand("presets", "List built-in presets");

    CommonOpts validate_opts;
    CLI::App* validate_cmd =
        app.add_subcommand("validate", "Parse and validate a config, print its canonical form");
    add_common(validate_cmd, validate_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (presets_cmd->parsed()) {
            cnsctrl::list_presets(std::cout);
            return 0;
        }
        if (validate_cmd->parsed()) {
            const cnsctrl::RunConfig cfg = load_config(validate_opts);
            std::cout << cnsctrl::serialize_config(cfg);
            return 0;
        }
        const cnsctrl::RunConfig cfg = load_config(run_opts);
        return cnsctrl::run(cfg, std::cerr);
    } catch (const cnsctrl::ParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return static_cast<int>(cnsctrl::ExitCode::ConfigError);
    } catch (const cnsctrl::ValidationError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return static_cast<int>(cnsctrl::ExitCode::ConfigError);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(cnsctrl::ExitCode::ConfigError);
    }
}
