/*
 Copyright 2026 The empc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "empc/commands.hpp"
#include "empc/logging.hpp"

int main(int argc, char** argv)
{
    empc::configure_logging();

    CLI::App app{"Economic MPC with Lyapunov constraints: closed-loop HVAC experiments"};
    app.require_subcommand(1);
    // Global flags may appear after the subcommand.
    app.fallthrough();

    empc::CommandOptions options;
    std::uint64_t seed = 0;
    std::string out_dir;
    double feas_tol = 0.0;
    std::string log_level;
    auto* seed_opt = app.add_option("--seed", seed, "Seed for sampling and simulation");
    auto* out_opt = app.add_option("--out-dir", out_dir, "Directory for CSV logs and summaries");
    auto* tol_opt = app.add_option("--feas-tol", feas_tol, "Solver feasibility tolerance")->check(CLI::PositiveNumber);
    app.add_option("--jobs", options.jobs, "Concurrent simulations")->check(CLI::PositiveNumber);
    app.add_option("--log-level", log_level, "Overrides EMPC_LOG_LEVEL");

    std::string scenario;
    double target = 0.0;
    std::string calibrated_out;

    auto* run = app.add_subcommand("run", "Simulate every controller in the scenario");
    run->add_option("scenario", scenario, "Scenario JSON")->required();
    auto* verify = app.add_subcommand("verify", "Synthesize and verify terminal ingredients, bound V_max");
    verify->add_option("scenario", scenario, "Scenario JSON")->required();
    auto* calibrate = app.add_subcommand("calibrate-kappa", "Fit kappa_bar to a target alg1 energy");
    calibrate->add_option("scenario", scenario, "Scenario JSON")->required();
    calibrate->add_option("--target", target, "Target 24 h energy in kWh")->required();
    calibrate->add_option("--output", calibrated_out, "Where to write the calibrated scenario");
    auto* steady = app.add_subcommand("steady-state", "Print the optimal admissible steady state");
    steady->add_option("scenario", scenario, "Scenario JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : empc::exit_code::kUsage;
    }
    try {
        if (!log_level.empty()) {
            empc::set_log_level(log_level);
        }
    } catch (const empc::UsageError& e) {
        std::cerr << e.what() << '\n';
        return empc::exit_code::kUsage;
    }
    if (*seed_opt) {
        options.seed = seed;
    }
    if (*out_opt) {
        options.out_dir = out_dir;
    }
    if (*tol_opt) {
        options.feas_tol = feas_tol;
    }

    if (*run) {
        return empc::cmd_run(scenario, options);
    }
    if (*verify) {
        return empc::cmd_verify(scenario, options);
    }
    if (*calibrate) {
        return empc::cmd_calibrate_kappa(scenario, target, options, calibrated_out);
    }
    return empc::cmd_steady_state(scenario, options);
}
