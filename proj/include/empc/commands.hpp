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
#ifndef EMPC_COMMANDS_HPP
#define EMPC_COMMANDS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "empc/equilibrium.hpp"
#include "empc/harness.hpp"
#include "empc/scenario.hpp"

namespace empc {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kMonitorFailure = 1;
inline constexpr int kUsage = 2;
inline constexpr int kInfeasible = 3;
inline constexpr int kVerifyFailure = 4;
inline constexpr int kNotBracketing = 5;
} // namespace exit_code

struct CommandOptions {
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<double> feas_tol;
    /// Worker threads for terminal verification; 0 picks the hardware concurrency.
    int verify_workers = 0;
};

/// Scenario with command-line overrides applied.
Scenario apply_overrides(Scenario scenario, const CommandOptions& options);

/// Model, steady state and verified terminal ingredients for one horizon length.
struct PreparedProblem {
    SystemModel model;
    SteadyState steady;
    CostSuite costs;
    TerminalIngredients terminal;
    TerminalVerdict verdict;
    VMaxReport v_max;
};

class VerificationFailure : public NumericalError {
public:
    VerificationFailure(const std::string& what, TerminalVerdict verdict)
        : NumericalError(what), verdict_(std::move(verdict))
    {
    }
    const TerminalVerdict& verdict() const { return verdict_; }

private:
    TerminalVerdict verdict_;
};

/// Throws SteadyStateError, SynthesisError or VerificationFailure.
PreparedProblem prepare_problem(const Scenario& scenario, int horizon, int verify_workers = 0);

struct RunResult {
    std::vector<SimLog> logs;
    nlohmann::json summary;
    int exit_code = exit_code::kOk;
};

/// Run every controller block; CSVs and summary.json are written when `write_files`.
RunResult run_scenario(const Scenario& scenario, const CommandOptions& options, bool write_files = true);

struct CalibrationResult {
    double kappa_bar = 0.0;
    double energy_kwh = 0.0;
    int evaluations = 0;
    bool bracketed = false;
    std::string message;
};

/// Bisection on kappa_bar so that the first alg1 run uses target_kwh within `tolerance`.
CalibrationResult calibrate_kappa(const Scenario& scenario, double target_kwh, double tolerance = 0.5,
                                  double kappa_max = 64.0);

int cmd_run(const std::string& scenario_path, const CommandOptions& options);
int cmd_verify(const std::string& scenario_path, const CommandOptions& options);
int cmd_calibrate_kappa(const std::string& scenario_path, double target_kwh, const CommandOptions& options,
                        const std::string& output_path = "");
int cmd_steady_state(const std::string& scenario_path, const CommandOptions& options);

} // namespace empc

#endif // EMPC_COMMANDS_HPP
