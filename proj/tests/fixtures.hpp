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
#ifndef EMPC_TESTS_FIXTURES_HPP
#define EMPC_TESTS_FIXTURES_HPP

#include <memory>

#include "empc/costs.hpp"
#include "empc/dynamics.hpp"
#include "empc/equilibrium.hpp"
#include "empc/horizon.hpp"

namespace empc::testing {

inline Vector vec2(double a, double b) { return (Vector(2) << a, b).finished(); }

inline Matrix paper_k()
{
    return (Matrix(2, 2) << 0.6947, 0.0059, 0.0061, 0.6818).finished();
}

inline SystemModel hvac_system(double g_offset = 15.0)
{
    return make_system(printed_two_zone_model(g_offset), hvac_state_box(), hvac_input_set(), {vec2(24.0, 25.0)},
                       600.0);
}

inline SystemModel rc_system()
{
    return make_system(discretize_rc(TwoZoneHvacParams{}), hvac_state_box(), hvac_input_set(), {vec2(24.0, 25.0)},
                       600.0);
}

inline CostSuite hvac_costs(const SystemModel& model, double kappa_bar = 1.0)
{
    EconomicCostParams econ;
    econ.kappa_bar = kappa_bar;
    const SteadyState ss = solve_steady_state(model, econ);
    CostSuite c;
    c.econ = econ;
    c.weights = TrackingWeights{Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix()};
    c.xs = ss.xs;
    c.us = ss.us;
    return c;
}

inline TerminalIngredients hvac_terminal(const SystemModel& model, const CostSuite& costs, int horizon = 5)
{
    TerminalOptions opts;
    opts.k_gain = paper_k();
    return synthesize_terminal(model, costs, horizon, opts);
}

/// Model, costs and terminal ingredients of the case study, built once per test binary.
struct HvacInstance {
    SystemModel model = rc_system();
    CostSuite costs = hvac_costs(model);
    TerminalIngredients terminal = hvac_terminal(model, costs);
    std::shared_ptr<const HorizonContext> context =
        std::make_shared<const HorizonContext>(model, costs, terminal, 5);
};

inline const HvacInstance& hvac()
{
    static const HvacInstance instance;
    return instance;
}

} // namespace empc::testing

#endif // EMPC_TESTS_FIXTURES_HPP
