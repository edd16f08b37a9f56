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
#include "empc/dynamics.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "empc/qp.hpp"

namespace empc {

std::optional<ConstraintSlack> AdmissibilityVerdict::first_violation(double tolerance) const
{
    for (const auto& row : rows) {
        if (row.slack < -tolerance) {
            return row;
        }
    }
    return std::nullopt;
}

double AdmissibilityVerdict::min_slack() const
{
    double m = std::numeric_limits<double>::infinity();
    for (const auto& row : rows) {
        m = std::min(m, row.slack);
    }
    return m;
}

SystemModel::SystemModel(int n_x, int n_u, StepMap step_map, StateBox state_box, InputSet input_set,
                         std::vector<Vector> asymptotic_set, double dt, JacobianMap jacobian)
    : n_x_(n_x),
      n_u_(n_u),
      step_map_(std::move(step_map)),
      state_box_(std::move(state_box)),
      input_set_(std::move(input_set)),
      asymptotic_set_(std::move(asymptotic_set)),
      dt_(dt),
      jacobian_(std::move(jacobian))
{
    if (n_x_ < 1 || n_u_ < 1) {
        throw UsageError("SystemModel: dimensions must be at least 1");
    }
    if (!step_map_) {
        throw UsageError("SystemModel: missing step map");
    }
    if (!(dt_ > 0.0)) {
        throw UsageError("SystemModel: dt must be positive");
    }
    require_dim(state_box_.lower, n_x_, "SystemModel state_box.lower");
    require_dim(state_box_.upper, n_x_, "SystemModel state_box.upper");
    for (int i = 0; i < n_x_; ++i) {
        if (!(state_box_.lower(i) < state_box_.upper(i))) {
            throw UsageError(fmt::format("SystemModel: state_box lower >= upper in coordinate {}", i));
        }
    }
    require_dim(input_set_.lower, n_u_, "SystemModel input_set.lower");
    require_dim(input_set_.upper, n_u_, "SystemModel input_set.upper");
    if (input_set_.a.size() == 0) {
        input_set_.a.resize(0, n_u_);
        input_set_.b.resize(0);
    }
    if (input_set_.a.cols() != n_u_ || input_set_.a.rows() != input_set_.b.size()) {
        throw UsageError("SystemModel: input_set rows inconsistent");
    }
    for (const auto& p : asymptotic_set_) {
        require_dim(p, n_x_, "SystemModel asymptotic_set point");
        if (!state_in_box(p, 0.0)) {
            throw UsageError("SystemModel: asymptotic_set point outside state_box");
        }
    }

    // Nonemptiness of U: a feasibility solve of min ||u||^2 over U.
    QpProblem qp;
    qp.hessian = Matrix::Identity(n_u_, n_u_);
    qp.gradient = Vector::Zero(n_u_);
    qp.a_eq.resize(0, n_u_);
    qp.b_eq.resize(0);
    std::vector<std::pair<Vector, double>> rows;
    for (Eigen::Index r = 0; r < input_set_.a.rows(); ++r) {
        rows.emplace_back(input_set_.a.row(r).transpose(), input_set_.b(r));
    }
    for (int i = 0; i < n_u_; ++i) {
        if (input_set_.lower(i) > input_set_.upper(i)) {
            throw UsageError(fmt::format("SystemModel: input bounds empty in coordinate {}", i));
        }
        if (std::isfinite(input_set_.lower(i))) {
            rows.emplace_back(-Vector::Unit(n_u_, i), -input_set_.lower(i));
        }
        if (std::isfinite(input_set_.upper(i))) {
            rows.emplace_back(Vector::Unit(n_u_, i), input_set_.upper(i));
        }
    }
    qp.a_in.resize(static_cast<Eigen::Index>(rows.size()), n_u_);
    qp.b_in.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        qp.a_in.row(static_cast<Eigen::Index>(r)) = rows[r].first.transpose();
        qp.b_in(static_cast<Eigen::Index>(r)) = rows[r].second;
    }
    if (solve_qp(qp, 1e-10).status != QpStatus::kOptimal) {
        throw UsageError("SystemModel: input set U is empty");
    }
}

Vector SystemModel::step(const Vector& x, const Vector& u) const
{
    require_dim(x, n_x_, "step: state");
    require_dim(u, n_u_, "step: control");
    return step_map_(x, u);
}

Sequence SystemModel::rollout(const Vector& x0, const Sequence& useq) const
{
    if (useq.empty()) {
        throw UsageError("rollout: control sequence must be nonempty");
    }
    Sequence states;
    states.reserve(useq.size() + 1);
    states.push_back(x0);
    for (const auto& u : useq) {
        states.push_back(step(states.back(), u));
    }
    return states;
}

void SystemModel::jacobians(const Vector& x, const Vector& u, Matrix& fx, Matrix& fu) const
{
    if (jacobian_) {
        require_dim(x, n_x_, "jacobians: state");
        require_dim(u, n_u_, "jacobians: control");
        jacobian_(x, u, fx, fu);
        return;
    }
    finite_difference_jacobians(x, u, fx, fu);
}

void SystemModel::finite_difference_jacobians(const Vector& x, const Vector& u, Matrix& fx, Matrix& fu) const
{
    fx.resize(n_x_, n_x_);
    fu.resize(n_x_, n_u_);
    Vector xp = x;
    for (int i = 0; i < n_x_; ++i) {
        const double h = 1e-6 * (1.0 + std::abs(x(i)));
        xp(i) = x(i) + h;
        const Vector fplus = step(xp, u);
        xp(i) = x(i) - h;
        fx.col(i) = (fplus - step(xp, u)) / (2.0 * h);
        xp(i) = x(i);
    }
    Vector up = u;
    for (int i = 0; i < n_u_; ++i) {
        const double h = 1e-6 * (1.0 + std::abs(u(i)));
        up(i) = u(i) + h;
        const Vector fplus = step(x, up);
        up(i) = u(i) - h;
        fu.col(i) = (fplus - step(x, up)) / (2.0 * h);
        up(i) = u(i);
    }
}

AdmissibilityVerdict SystemModel::is_admissible(const Vector& x, const Vector& u, double tolerance) const
{
    require_dim(x, n_x_, "is_admissible: state");
    require_dim(u, n_u_, "is_admissible: control");
    AdmissibilityVerdict verdict;
    auto add = [&](std::string name, double slack, bool is_state) {
        if (!std::isfinite(slack)) {
            return;
        }
        if (slack < -tolerance) {
            (is_state ? verdict.state_ok : verdict.input_ok) = false;
        }
        verdict.rows.push_back({std::move(name), slack});
    };
    for (int i = 0; i < n_x_; ++i) {
        add(fmt::format("x[{}] >= lower", i), x(i) - state_box_.lower(i), true);
        add(fmt::format("x[{}] <= upper", i), state_box_.upper(i) - x(i), true);
    }
    for (int i = 0; i < n_u_; ++i) {
        add(fmt::format("u[{}] >= lower", i), u(i) - input_set_.lower(i), false);
        add(fmt::format("u[{}] <= upper", i), input_set_.upper(i) - u(i), false);
    }
    for (Eigen::Index r = 0; r < input_set_.a.rows(); ++r) {
        add(fmt::format("input row {}", r), input_set_.b(r) - input_set_.a.row(r).dot(u), false);
    }
    return verdict;
}

bool SystemModel::state_in_box(const Vector& x, double tolerance) const
{
    return ((x - state_box_.lower).array() >= -tolerance).all() &&
           ((state_box_.upper - x).array() >= -tolerance).all();
}

double SystemModel::input_slack(const Vector& u) const
{
    double slack = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_u_; ++i) {
        slack = std::min({slack, u(i) - input_set_.lower(i), input_set_.upper(i) - u(i)});
    }
    for (Eigen::Index r = 0; r < input_set_.a.rows(); ++r) {
        slack = std::min(slack, input_set_.b(r) - input_set_.a.row(r).dot(u));
    }
    return slack;
}

bool SystemModel::input_in_set(const Vector& u, double tolerance) const
{
    return input_slack(u) >= -tolerance;
}

void TwoZoneHvacParams::validate() const
{
    for (double v : {c1, c2, cp, r12, r1o, r2o}) {
        if (!(v > 0.0)) {
            throw UsageError("TwoZoneHvacParams: capacitances, resistances and cp must be positive");
        }
    }
    if (!(dt_seconds > 0.0)) {
        throw UsageError("TwoZoneHvacParams: dt_seconds must be positive");
    }
}

Vector AffineBilinearModel::step(const Vector& x, const Vector& u) const
{
    return a_matrix * x + input_matrix(x) * u + d_vector;
}

Matrix AffineBilinearModel::input_matrix(const Vector& x) const
{
    return (g_coeff.array() * (g_offset - x).array()).matrix().asDiagonal();
}

void AffineBilinearModel::validate() const
{
    const Eigen::Index n = a_matrix.rows();
    if (n < 1 || a_matrix.cols() != n || g_coeff.size() != n || g_offset.size() != n || d_vector.size() != n) {
        throw UsageError("AffineBilinearModel: inconsistent dimensions");
    }
    if (!a_matrix.allFinite() || !g_coeff.allFinite() || !g_offset.allFinite() || !d_vector.allFinite()) {
        throw UsageError("AffineBilinearModel: non-finite coefficient");
    }
}

AffineBilinearModel discretize_rc(const TwoZoneHvacParams& p, Discretization method)
{
    p.validate();
    const double dt = p.dt_seconds;
    Matrix a_c(2, 2);
    a_c << -(1.0 / p.r12 + 1.0 / p.r1o) / p.c1, 1.0 / (p.r12 * p.c1),
        1.0 / (p.r12 * p.c2), -(1.0 / p.r12 + 1.0 / p.r2o) / p.c2;

    AffineBilinearModel model;
    if (method == Discretization::kMatrixExponential) {
        model.a_matrix = (a_c * dt).exp();
    } else {
        model.a_matrix = Matrix::Identity(2, 2) + dt * a_c;
    }
    model.g_coeff = Eigen::Vector2d(dt * p.cp / p.c1, dt * p.cp / p.c2);
    model.g_offset = Eigen::Vector2d(p.ts1, p.ts2);
    model.d_vector = Eigen::Vector2d(dt * (p.to / (p.c1 * p.r1o) + p.q1 / p.c1),
                                     dt * (p.to / (p.c2 * p.r2o) + p.q2 / p.c2));
    return model;
}

AffineBilinearModel printed_two_zone_model(double g_offset)
{
    AffineBilinearModel model;
    model.a_matrix.resize(2, 2);
    model.a_matrix << 0.9940, 0.0047, 0.0047, 0.9940;
    model.g_coeff = Eigen::Vector2d(0.0663, 0.0663);
    model.g_offset = Eigen::Vector2d(g_offset, g_offset);
    model.d_vector = Eigen::Vector2d(0.3038, 0.3038);
    return model;
}

InputSet hvac_input_set(double max_total_flow)
{
    InputSet set;
    set.a = Matrix::Ones(1, 2);
    set.b = Vector::Constant(1, max_total_flow);
    set.lower = Vector::Zero(2);
    set.upper = Vector::Constant(2, max_total_flow);
    return set;
}

StateBox hvac_state_box(double lower, double upper)
{
    return {Vector::Constant(2, lower), Vector::Constant(2, upper)};
}

SystemModel make_system(const AffineBilinearModel& model, StateBox state_box, InputSet input_set,
                        std::vector<Vector> asymptotic_set, double dt)
{
    model.validate();
    const int n = model.n_x();
    auto step_map = [model](const Vector& x, const Vector& u) { return model.step(x, u); };
    auto jacobian = [model](const Vector& x, const Vector& u, Matrix& fx, Matrix& fu) {
        fx = model.a_matrix;
        fx.diagonal() -= (model.g_coeff.array() * u.array()).matrix();
        fu = model.input_matrix(x);
    };
    return SystemModel(n, n, step_map, std::move(state_box), std::move(input_set), std::move(asymptotic_set), dt,
                       jacobian);
}

} // namespace empc
