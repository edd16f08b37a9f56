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
#ifndef EMPC_SCENARIO_HPP
#define EMPC_SCENARIO_HPP

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "empc/controller.hpp"
#include "empc/costs.hpp"
#include "empc/dynamics.hpp"
#include "empc/horizon.hpp"

namespace empc {

/// Validation failure with the offending field path, e.g. "controllers[1].beta".
class ScenarioError : public UsageError {
public:
    ScenarioError(const std::string& field, const std::string& message)
        : UsageError(field.empty() ? message : field + ": " + message), field_(field)
    {
    }
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct ModelBlock {
    /// "rc" (discretize Table-style parameters), "printed" or "explicit".
    std::string source = "rc";
    TwoZoneHvacParams params;
    Discretization discretization = Discretization::kForwardEuler;
    std::optional<double> g_offset;
    std::optional<AffineBilinearModel> explicit_model;
    StateBox state_box = hvac_state_box();
    InputSet input_set = hvac_input_set();
    std::vector<Vector> asymptotic_set{(Vector(2) << 24.0, 25.0).finished()};
};

struct CostsBlock {
    Matrix q = Matrix::Identity(2, 2);
    Matrix r = Matrix::Identity(2, 2);
    EconomicCostParams econ;
    PenaltySpec penalties;
};

struct TerminalBlock {
    /// Empty means: use the LQR gain of (Q, R).
    std::optional<Matrix> k_gain = (Matrix(2, 2) << 0.6947, 0.0059, 0.0061, 0.6818).finished();
    double epsilon = 0.1;
    double alpha_shrink = 0.95;
    int verify_samples = 10000;
    int v_max_samples = 10000;
    std::uint64_t seed = 7;
};

struct ControllerBlock {
    std::string label;
    Scheme scheme = Scheme::kAlg1;
    int horizon = 5;
    int m = 2;
    double beta = 1.0;
    double tau = 0.6;
    std::optional<double> v_max;
};

struct SolverBlock {
    NlpOptions nlp;
    Differentiation differentiation = Differentiation::kAnalytic;
    double warm_start_tol = 1e-6;
};

struct SimBlock {
    Vector x0 = (Vector(2) << 31.0, 30.0).finished();
    int steps = 144;
    std::uint64_t seed = 0;
};

struct Scenario {
    ModelBlock model;
    CostsBlock costs;
    TerminalBlock terminal;
    std::vector<ControllerBlock> controllers;
    SolverBlock solver;
    SimBlock sim;
    std::string output_dir = "out";
    /// Defaults applied and inconsistencies noticed while loading.
    std::vector<std::string> notices;
};

/// The built-in experiment: tracking, alg1 and alg2 with m = 4 and m = 8.
Scenario default_scenario();

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& scenario);
/// Parse and validate a file. Syntax errors report line and column.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text);

AffineBilinearModel build_dynamics(const Scenario& scenario);
SystemModel build_system(const Scenario& scenario);
CostSuite build_costs(const Scenario& scenario, const Vector& xs, const Vector& us);
ControllerConfig build_controller_config(const Scenario& scenario, const ControllerBlock& block);

} // namespace empc

#endif // EMPC_SCENARIO_HPP
