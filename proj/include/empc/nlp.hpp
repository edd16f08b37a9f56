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
#ifndef EMPC_NLP_HPP
#define EMPC_NLP_HPP

#include <functional>
#include <string>

#include "empc/common.hpp"

namespace empc {

/// Objective callback: returns f(x) and writes the gradient when `grad` is non-null.
using ObjectiveFn = std::function<double(const Vector& x, Vector* grad)>;
/// Constraint callback: returns c(x) and writes the Jacobian when `jac` is non-null.
using ConstraintFn = std::function<Vector(const Vector& x, Matrix* jac)>;

/**
 * @brief min f(x) s.t. c_eq(x) = 0, c_in(x) <= 0, lower <= x <= upper.
 */
struct NlpSpec {
    int n_vars = 0;
    ObjectiveFn objective;
    int n_eq = 0;
    ConstraintFn eq_constraints;
    int n_ineq = 0;
    ConstraintFn ineq_constraints;
    Vector lower;
    Vector upper;
    Vector initial_point;

    void validate() const;
};

enum class NlpStatus { kOptimal, kFeasibleSuboptimal, kInfeasible, kIterationLimit };

const char* to_string(NlpStatus status);

struct NlpOptions {
    double feas_tol = 1e-8;
    double opt_tol = 1e-6;
    int max_iter = 200;
};

struct NlpResult {
    Vector x;
    double objective = 0.0;
    double max_violation = 0.0;
    double stationarity = 0.0;
    NlpStatus status = NlpStatus::kInfeasible;
    int iterations = 0;

    bool feasible(double feas_tol) const { return max_violation <= feas_tol; }
};

/// Thrown when a callback produces a non-finite value.
class CallbackError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/**
 * @brief SQP with a damped-BFGS Hessian and an l1-penalty backtracking line search.
 *
 * Linearizations that are inconsistent are handled by an elastic QP. The best
 * feasible iterate seen is returned whenever the iteration does not converge.
 */
NlpResult solve(const NlpSpec& spec, const NlpOptions& options = {});

/// Max violation of the equality, inequality and bound constraints at x.
double max_constraint_violation(const NlpSpec& spec, const Vector& x);

} // namespace empc

#endif // EMPC_NLP_HPP
