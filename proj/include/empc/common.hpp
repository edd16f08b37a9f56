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
#ifndef EMPC_COMMON_HPP
#define EMPC_COMMON_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace empc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A sequence of vectors indexed by prediction step (states or controls).
using Sequence = std::vector<Eigen::VectorXd>;

/// Caller violated a documented precondition (dimensions, ranges, missing fields).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce a valid result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Stack a control sequence into a single decision vector (u_0, u_1, ...).
Vector stack(const Sequence& seq);

/// Split a decision vector into `blocks` equally sized vectors.
Sequence unstack(const Vector& z, int blocks);

void require_dim(const Vector& v, int expected, const char* what);

} // namespace empc

#endif // EMPC_COMMON_HPP
