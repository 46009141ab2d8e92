// pfem command line: run and validate scenario configurations, evaluate the
// analytic reference solutions.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include "pfem/error.hpp"
#include "pfem/scenario.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>

namespace {

int cmd_run(const std::string& path) {
    const pfem::ScenarioConfig cfg = pfem::parse_config(path);
    const pfem::RunResult res = pfem::run_scenario(cfg);
    std::printf("completed %d steps to t = %.6g\n", res.steps, res.final_time);
    std::printf("initial volume %.9g, max relative volume variation %.3e\n",
                res.initial_volume, res.max_rel_volume_variation);
    return 0;
}

int cmd_validate(const std::string& path) {
    const pfem::ScenarioConfig cfg = pfem::parse_config(path);
    std::cout << pfem::config_echo(cfg);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"particle finite element engine for free-surface flows"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run a scenario configuration");
    run->add_option("config", config_path, "configuration file")->required();

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "parse a configuration and echo it");
    validate->add_option("config", validate_path, "configuration file")->required();

    auto* oracle = app.add_subcommand("oracle", "print analytic reference values");
    std::string which;
    oracle->add_option("kind", which, "sloshing | vortex")->required();
    double o_t = 0.0, o_nu = 0.0, o_k = M_PI, o_g = 9.81;
    double o_x = 0.5, o_y = 0.5, o_T = 5.0;
    oracle->add_option("--t", o_t, "time");
    oracle->add_option("--nu", o_nu, "kinematic viscosity (sloshing)");
    oracle->add_option("--k", o_k, "wavenumber (sloshing)");
    oracle->add_option("--g", o_g, "gravity magnitude (sloshing)");
    oracle->add_option("--x", o_x, "x coordinate (vortex)");
    oracle->add_option("--y", o_y, "y coordinate (vortex)");
    oracle->add_option("--period", o_T, "reversal period (vortex)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path);
        if (validate->parsed()) return cmd_validate(validate_path);
        if (oracle->parsed()) {
            if (which == "sloshing") {
                std::printf("%.12g\n", pfem::sloshing_wave_ratio(o_t, o_nu, o_k, o_g));
                return 0;
            }
            if (which == "vortex") {
                const pfem::Vec2 u = pfem::vortex_velocity({o_x, o_y}, o_t, o_T);
                std::printf("%.12g %.12g\n", u.x, u.y);
                return 0;
            }
            std::fprintf(stderr, "unknown oracle '%s' (expected sloshing or vortex)\n",
                         which.c_str());
            return 2;
        }
    } catch (const pfem::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const pfem::Error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    }
    return 0;
}
