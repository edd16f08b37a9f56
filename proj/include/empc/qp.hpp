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
#ifndef EMPC_QP_HPP
#define EMPC_QP_HPP

#include "empc/common.hpp"

namespace empc {

/**
 * @brief Dense strictly convex QP
 *
 *   min 0.5 x'Hx + g'x  s.t.  a_eq x = b_eq,  a_in x <= b_in
 *
 * H must be symmetric positive definite.
 */
struct QpProblem {
    Matrix hessian;
    Vector gradient;
    Matrix a_eq;
    Vector b_eq;
    Matrix a_in;
    Vector b_in;
};

enum class QpStatus { kOptimal, kInfeasible, kIterationLimit, kNotConvex };

struct QpResult {
    QpStatus status = QpStatus::kInfeasible;
    Vector x;
    /// Multipliers so that Hx + g + a_eq' lambda_eq + a_in' lambda_in = 0, lambda_in >= 0.
    Vector lambda_eq;
    Vector lambda_in;
    double objective = 0.0;
    int iterations = 0;
};

/// Goldfarb-Idnani dual active-set method.
QpResult solve_qp(const QpProblem& qp, double tolerance = 1e-12, int max_iterations = 0);

const char* to_string(QpStatus status);

} // namespace empc

#endif // EMPC_QP_HPP
