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
#ifndef EMPC_HORIZON_HPP
#define EMPC_HORIZON_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "empc/common.hpp"
#include "empc/costs.hpp"
#include "empc/dynamics.hpp"
#include "empc/equilibrium.hpp"
#include "empc/nlp.hpp"

namespace empc {

/// Which finite-horizon problem to build.
enum class HorizonKind {
    kTracking,   // sum l + l_f, terminal constraint
    kEconPlain,  // sum l_e, terminal constraint
    kEconEta,    // plus V^delta <= eta
    kEconXiZeta, // plus V^delta <= xi and V^delta - beta J^delta <= zeta
    kEconZeta,   // plus V^delta - beta J^delta <= zeta
    kFeasibility // min l_f(x_N) under input and state rows only
};

const char* to_string(HorizonKind kind);
HorizonKind horizon_kind_from_string(const std::string& name);

enum class Differentiation { kAnalytic, kFiniteDifference };

/// Lyapunov constraint levels. An infinite level drops its row.
struct LyapunovLevels {
    std::optional<double> eta;
    std::optional<double> xi;
    std::optional<double> zeta;
    double beta = 1.0;
};

/**
 * @brief Everything a horizon problem needs besides x0 and the levels.
 *
 * The cost suite carries P from the terminal ingredients.
 */
struct HorizonContext {
    HorizonContext(SystemModel model, const CostSuite& costs, TerminalIngredients terminal, int horizon,
                   Differentiation differentiation = Differentiation::kAnalytic);

    SystemModel model;
    CostSuite costs;
    TerminalIngredients terminal;
    int horizon;
    Differentiation differentiation;

    int n_vars() const { return horizon * model.n_u(); }
};

/// Values along one rollout, with gradients w.r.t. the stacked controls when requested.
struct HorizonEvaluation {
    Sequence states;
    double v_delta = 0.0;
    double j_delta = 0.0;
    double v_tracking = 0.0;
    double v_econ = 0.0;
    double terminal_level = 0.0;

    Vector grad_v_delta;
    Vector grad_j_delta;
    Vector grad_v_tracking;
    Vector grad_v_econ;
    Vector grad_terminal_level;
    /// d x_k / d z for k = 0..N.
    std::vector<Matrix> sensitivities;
};

HorizonEvaluation evaluate_horizon(const HorizonContext& ctx, const Vector& x0, const Vector& z,
                                   bool with_gradients);

/**
 * @brief Single-shooting NLP over z = (u_0, ..., u_{N-1}).
 *
 * Inequality rows, in order: input-set rows per step, finite state-box rows
 * for x_0..x_{N-1}, the terminal row l_f(x_N) <= alpha, then the Lyapunov
 * rows of `kind`. Input bounds become variable bounds.
 */
NlpSpec build_horizon_problem(std::shared_ptr<const HorizonContext> ctx, HorizonKind kind, const Vector& x0,
                              const LyapunovLevels& levels, const Vector& initial_point);

/// Drop u_0 and append kappa_f(x_N).
Sequence warm_start_shift(const Sequence& prev_useq, const Vector& prev_x_n, const TerminalIngredients& ingredients);

struct VMaxReport {
    double bound = 0.0;
    double stage_max = 0.0;
    double delta_max = 0.0;
    double terminal_max = 0.0;
    double sampled_max = 0.0;
    int samples = 0;
};

/**
 * @brief Upper bound on V^delta over feasible (x, u):
 *   sum_k (max l + k max delta) + min(alpha, max l_f)
 * with each quadratic maximized over the vertices of X x box(U). Throws
 * NumericalError if any of `n_samples` sampled feasible values exceeds it.
 */
VMaxReport compute_v_max(const SystemModel& model, const CostSuite& costs, const TerminalIngredients& ingredients,
                         int horizon, int n_samples, std::uint64_t seed = 23);

/// Max of a convex quadratic (v - c)' W (v - c) over the box [lo, hi] by vertex enumeration.
double box_quadratic_max(const Matrix& w, const Vector& center, const Vector& lo, const Vector& hi);

} // namespace empc

#endif // EMPC_HORIZON_HPP
