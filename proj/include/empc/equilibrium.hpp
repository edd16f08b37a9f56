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
#ifndef EMPC_EQUILIBRIUM_HPP
#define EMPC_EQUILIBRIUM_HPP

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "empc/common.hpp"
#include "empc/costs.hpp"
#include "empc/dynamics.hpp"

namespace empc {

struct SteadyState {
    Vector xs;
    Vector us;
    double cost = 0.0;
    double residual = 0.0;
};

struct SteadyStateOptions {
    double tolerance = 1e-8;
    int max_newton_iterations = 50;
};

/// Raised when no admissible steady input exists or g(x_s) is singular.
class SteadyStateError : public NumericalError {
public:
    SteadyStateError(const std::string& what, double residual)
        : NumericalError(what), residual_(residual)
    {
    }
    double residual() const { return residual_; }

private:
    double residual_;
};

/**
 * @brief Cheapest admissible equilibrium over the asymptotic target points.
 *
 * Each target x is held fixed and f(x,u) = x is solved for u: by Newton's
 * method when n_u == n_x (the solution is then unique), otherwise by
 * minimizing the economic cost subject to the equilibrium equations.
 */
SteadyState solve_steady_state(const SystemModel& model, const EconomicCostParams& econ,
                               const SteadyStateOptions& options = {});

/// Outcome of the sampled terminal-set checks, with the smallest margin per check.
struct TerminalVerdict {
    bool passed = false;
    int samples = 0;
    double admissibility_margin = 0.0; // kappa_f(x) in U, x in X
    double invariance_margin = 0.0;    // f(x, kappa_f(x)) in X_f
    double decrease_margin = 0.0;      // terminal decrease inequality
    std::string failed_check;
    Vector worst_point;
};

/**
 * @brief Terminal law kappa_f(x) = K (x - xs) + us, cost |x - xs|_P^2, set {l_f <= alpha}.
 */
struct TerminalIngredients {
    Matrix k_gain;
    Matrix p_matrix;
    double alpha = 0.0;
    Vector xs;
    Vector us;
    std::optional<TerminalVerdict> verified;

    Vector kappa(const Vector& x) const { return k_gain * (x - xs) + us; }
    double level(const Vector& x) const
    {
        const Vector dx = x - xs;
        return dx.dot(p_matrix * dx);
    }
    bool contains(const Vector& x, double tolerance = 0.0) const { return level(x) <= alpha + tolerance; }
};

struct TerminalOptions {
    std::optional<Matrix> k_gain;
    double epsilon = 0.1;
    /// Fraction of the bisected level that is kept.
    double alpha_shrink = 0.95;
    int boundary_samples = 720;
    double alpha_cap = 1e6;
    std::uint64_t seed = 7;
};

class SynthesisError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Jacobians of the step map at (xs, us).
void linearize(const SystemModel& model, const Vector& xs, const Vector& us, Matrix& a, Matrix& b);

/// Infinite-horizon discrete LQR gain in the convention u - us = K (x - xs).
Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r);

/// Solves A' P A - P = -W for P.
Matrix solve_discrete_lyapunov(const Matrix& a, const Matrix& w);

double spectral_radius(const Matrix& a);

/**
 * @brief Terminal weight P and level alpha for the decrease condition
 *   l_f(f(x,kf)) - l_f(x) <= -l(x,kf) - (N-1) delta(x,kf) - gamma(x)  on X_f.
 *
 * P solves the Lyapunov equation of the closed-loop linearization with the
 * right-hand side inflated by (1 + epsilon); alpha is the largest level whose
 * sampled boundary and inner shells pass every check, times alpha_shrink.
 * `costs.weights.p` is ignored.
 */
TerminalIngredients synthesize_terminal(const SystemModel& model, const CostSuite& costs, int horizon,
                                        const TerminalOptions& options = {});

/// Margins of the three checks at one point.
struct TerminalMargins {
    double admissibility = 0.0;
    double invariance = 0.0;
    double decrease = 0.0;
};

TerminalMargins terminal_margins(const SystemModel& model, const CostSuite& costs,
                                 const TerminalIngredients& ingredients, int horizon, const Vector& x);

/**
 * @brief Sample X_f (half on the boundary, half interior) and check admissibility,
 * invariance and the decrease condition. Deterministic for a given seed,
 * independent of `workers`.
 */
TerminalVerdict verify_terminal(const SystemModel& model, const CostSuite& costs,
                                const TerminalIngredients& ingredients, int horizon, int n_samples,
                                std::uint64_t seed = 11, int workers = 0, double tolerance = 1e-12);

nlohmann::json to_json(const TerminalIngredients& ingredients);
TerminalIngredients terminal_from_json(const nlohmann::json& j);

/// The cost suite with P taken from the terminal ingredients.
CostSuite with_terminal(CostSuite costs, const TerminalIngredients& ingredients);

} // namespace empc

#endif // EMPC_EQUILIBRIUM_HPP
