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
#include "empc/sampling.hpp"

#include <cmath>
#include <limits>

#include "empc/qp.hpp"

namespace empc {

Vector random_unit(int n, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(n);
    do {
        for (int i = 0; i < n; ++i) {
            z(i) = normal(rng);
        }
    } while (z.norm() < 1e-12);
    return z / z.norm();
}

Vector ellipsoid_point(const TerminalIngredients& ingredients, const Vector& unit, double scale)
{
    const Eigen::LLT<Matrix> llt(ingredients.p_matrix);
    // dx = sqrt(alpha) L^{-T} z gives dx' P dx = alpha |z|^2.
    const Vector dx = llt.matrixU().solve(unit);
    return ingredients.xs + scale * std::sqrt(ingredients.alpha) * dx;
}

Vector ellipsoid_interior(const TerminalIngredients& ingredients, std::mt19937_64& rng)
{
    const Matrix p_inv = ingredients.p_matrix.inverse();
    const Eigen::Index n = ingredients.xs.size();
    const Vector half_width = (ingredients.alpha * p_inv.diagonal()).cwiseSqrt();
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    while (true) {
        Vector x(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            x(i) = ingredients.xs(i) + half_width(i) * uniform(rng);
        }
        if (ingredients.contains(x)) {
            return x;
        }
    }
}

Vector project_to_input_set(const SystemModel& model, const Vector& u)
{
    const InputSet& set = model.input_set();
    const int n = model.n_u();
    if (model.input_in_set(u, 0.0)) {
        return u;
    }
    QpProblem qp;
    qp.hessian = Matrix::Identity(n, n);
    qp.gradient = -u;
    qp.a_eq.resize(0, n);
    qp.b_eq.resize(0);
    std::vector<std::pair<Vector, double>> rows;
    for (Eigen::Index r = 0; r < set.a.rows(); ++r) {
        rows.emplace_back(set.a.row(r).transpose(), set.b(r));
    }
    for (int i = 0; i < n; ++i) {
        if (std::isfinite(set.upper(i))) {
            rows.emplace_back(Vector::Unit(n, i), set.upper(i));
        }
        if (std::isfinite(set.lower(i))) {
            rows.emplace_back(-Vector::Unit(n, i), -set.lower(i));
        }
    }
    qp.a_in.resize(static_cast<Eigen::Index>(rows.size()), n);
    qp.b_in.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        qp.a_in.row(static_cast<Eigen::Index>(r)) = rows[r].first.transpose();
        qp.b_in(static_cast<Eigen::Index>(r)) = rows[r].second;
    }
    const QpResult res = solve_qp(qp, 1e-14);
    if (res.status != QpStatus::kOptimal) {
        throw NumericalError("project_to_input_set: projection failed");
    }
    // Clean up round-off so that the result passes a zero-tolerance membership test.
    Vector out = res.x.cwiseMax(set.lower).cwiseMin(set.upper);
    for (int pass = 0; pass < 4 && !model.input_in_set(out, 0.0); ++pass) {
        out *= 1.0 - 1e-14;
        out = out.cwiseMax(set.lower).cwiseMin(set.upper);
    }
    return out;
}

std::vector<FeasiblePair> sample_feasible_pairs(const SystemModel& model, const TerminalIngredients& ingredients,
                                                int horizon, int count, std::uint64_t seed, int max_attempts)
{
    if (horizon < 1 || count < 0) {
        throw UsageError("sample_feasible_pairs: horizon must be >= 1 and count >= 0");
    }
    if (max_attempts <= 0) {
        max_attempts = 2000 * std::max(count, 1);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit_interval(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const StateBox& box = model.state_box();
    const int n_x = model.n_x();
    const int n_u = model.n_u();

    std::vector<FeasiblePair> pairs;
    pairs.reserve(static_cast<std::size_t>(count));
    for (int attempt = 0; attempt < max_attempts && static_cast<int>(pairs.size()) < count; ++attempt) {
        Vector x0(n_x);
        const double mode = unit_interval(rng);
        if (mode < 0.4) {
            for (int i = 0; i < n_x; ++i) {
                x0(i) = box.lower(i) + (box.upper(i) - box.lower(i)) * unit_interval(rng);
            }
        } else {
            const double radius = mode < 0.7 ? 1.0 : 4.0;
            for (int i = 0; i < n_x; ++i) {
                x0(i) = ingredients.xs(i) + radius * normal(rng);
            }
            x0 = x0.cwiseMax(box.lower).cwiseMin(box.upper);
        }
        const double noise = unit_interval(rng) * 0.5;
        Sequence useq;
        Vector x = x0;
        bool ok = model.state_in_box(x0, 0.0);
        for (int k = 0; k < horizon && ok; ++k) {
            Vector u = ingredients.kappa(x);
            for (int i = 0; i < n_u; ++i) {
                u(i) += noise * normal(rng);
            }
            u = project_to_input_set(model, u);
            useq.push_back(u);
            x = model.step(x, u);
            ok = model.state_in_box(x, 0.0);
        }
        if (ok && ingredients.contains(x)) {
            pairs.push_back({x0, std::move(useq)});
        }
    }
    return pairs;
}

} // namespace empc
