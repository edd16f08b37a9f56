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
#ifndef EMPC_SAMPLING_HPP
#define EMPC_SAMPLING_HPP

#include <cstdint>
#include <random>

#include "empc/common.hpp"
#include "empc/dynamics.hpp"
#include "empc/equilibrium.hpp"

namespace empc {

/// Uniformly distributed direction on the unit sphere.
Vector random_unit(int n, std::mt19937_64& rng);

/// Point on the level set {l_f = scale^2 * alpha} in direction `unit`.
Vector ellipsoid_point(const TerminalIngredients& ingredients, const Vector& unit, double scale = 1.0);

/// Uniform point inside X_f by rejection from its bounding box.
Vector ellipsoid_interior(const TerminalIngredients& ingredients, std::mt19937_64& rng);

/// Euclidean projection onto U.
Vector project_to_input_set(const SystemModel& model, const Vector& u);

struct FeasiblePair {
    Vector x0;
    Sequence useq;
};

/**
 * @brief Random (x0, u) pairs with every predicted state in X, every control
 * in U and the terminal state in X_f. Controls are noisy terminal-law
 * feedback projected onto U; initial states mix uniform draws over X with
 * draws near the steady state.
 */
std::vector<FeasiblePair> sample_feasible_pairs(const SystemModel& model, const TerminalIngredients& ingredients,
                                                int horizon, int count, std::uint64_t seed,
                                                int max_attempts = 0);

} // namespace empc

#endif // EMPC_SAMPLING_HPP
