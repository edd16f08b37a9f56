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
#include "empc/costs.hpp"

#include <cmath>

#include <fmt/format.h>

namespace empc {

namespace {

void require_spd(const Matrix& m, const char* name)
{
    if (m.rows() == 0 || m.rows() != m.cols()) {
        throw UsageError(fmt::format("TrackingWeights: {} must be square and nonempty", name));
    }
    if (!m.isApprox(m.transpose(), 1e-12)) {
        throw UsageError(fmt::format("TrackingWeights: {} must be symmetric", name));
    }
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) {
        throw UsageError(fmt::format("TrackingWeights: {} must be positive definite", name));
    }
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

} // namespace

void TrackingWeights::validate() const
{
    require_spd(q, "Q");
    require_spd(r, "R");
    if (p.size() > 0) {
        require_spd(p, "P");
    }
}

void EconomicCostParams::validate() const
{
    if (!(eta_c > 0.0) || !(eta_h > 0.0)) {
        throw UsageError("EconomicCostParams: eta_c and eta_h must be positive");
    }
    if (!(kappa_bar >= 0.0)) {
        throw UsageError("EconomicCostParams: kappa_bar must be nonnegative");
    }
    if (th.size() != ts.size()) {
        throw UsageError("EconomicCostParams: th and ts must have equal length");
    }
}

void PenaltySpec::validate() const
{
    if (!(delta_coeff > 0.0) || !(gamma_coeff > 0.0)) {
        throw UsageError("PenaltySpec: delta and gamma coefficients must be strictly positive");
    }
}

double econ_stage_cost(const EconomicCostParams& params, const Vector& x, const Vector& u)
{
    return econ_stage_cost_with_gradient(params, x, u).value;
}

StageValue econ_stage_cost_with_gradient(const EconomicCostParams& params, const Vector& x, const Vector& u)
{
    require_dim(x, static_cast<int>(params.ts.size()), "econ_stage_cost: state");
    require_dim(u, static_cast<int>(params.ts.size()), "econ_stage_cost: control");
    const double total = u.sum();
    StageValue out;
    out.dx = Vector::Zero(x.size());
    out.du = Vector::Constant(u.size(), 3.0 * params.kappa_bar * total * total);
    out.value = params.kappa_bar * total * total * total;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double cool = params.ts(i) - x(i);
        const double heat = params.th(i) - x(i);
        out.value += u(i) * params.cp * (std::abs(cool) / params.eta_c + std::abs(heat) / params.eta_h);
        out.du(i) += params.cp * (std::abs(cool) / params.eta_c + std::abs(heat) / params.eta_h);
        out.dx(i) = -u(i) * params.cp * (sign(cool) / params.eta_c + sign(heat) / params.eta_h);
    }
    return out;
}

TrackingValue tracking_costs(const TrackingWeights& weights, const Vector& xs, const Vector& us, const Vector& x,
                             const Vector& u)
{
    const Vector dx = x - xs;
    const Vector du = u - us;
    TrackingValue out;
    out.stage = dx.dot(weights.q * dx) + du.dot(weights.r * du);
    out.terminal = weights.p.size() > 0 ? dx.dot(weights.p * dx) : 0.0;
    return out;
}

StageValue CostSuite::econ_stage(const Vector& x, const Vector& u) const
{
    return econ_stage_cost_with_gradient(econ, x, u);
}

StageValue CostSuite::tracking_stage(const Vector& x, const Vector& u) const
{
    const Vector dx = x - xs;
    const Vector du = u - us;
    StageValue out;
    const Vector qdx = weights.q * dx;
    const Vector rdu = weights.r * du;
    out.value = dx.dot(qdx) + du.dot(rdu);
    out.dx = 2.0 * qdx;
    out.du = 2.0 * rdu;
    return out;
}

StageValue CostSuite::terminal(const Vector& x) const
{
    if (weights.p.size() == 0) {
        throw UsageError("CostSuite: terminal weight P not set");
    }
    const Vector dx = x - xs;
    const Vector pdx = weights.p * dx;
    StageValue out;
    out.value = dx.dot(pdx);
    out.dx = 2.0 * pdx;
    return out;
}

StageValue CostSuite::delta(const Vector& x, const Vector& u) const
{
    const Vector dx = x - xs;
    const Vector du = u - us;
    StageValue out;
    out.value = penalties.delta_coeff * (dx.squaredNorm() + du.squaredNorm());
    out.dx = 2.0 * penalties.delta_coeff * dx;
    out.du = 2.0 * penalties.delta_coeff * du;
    return out;
}

StageValue CostSuite::gamma(const Vector& x) const
{
    const Vector dx = x - xs;
    StageValue out;
    out.value = penalties.gamma_coeff * dx.squaredNorm();
    out.dx = 2.0 * penalties.gamma_coeff * dx;
    return out;
}

double v_delta(const SystemModel& model, const CostSuite& costs, const Sequence& useq, const Vector& x0)
{
    const Sequence xs = model.rollout(x0, useq);
    const std::size_t n = useq.size();
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        total += costs.tracking_stage(xs[k], useq[k]).value;
        if (k > 0) {
            total += static_cast<double>(k) * costs.delta(xs[k], useq[k]).value;
        }
    }
    return total + costs.terminal(xs[n]).value;
}

double j_delta(const SystemModel& model, const CostSuite& costs, const Sequence& useq, const Vector& x0)
{
    const Sequence xs = model.rollout(x0, useq);
    const std::size_t n = useq.size();
    double total = costs.tracking_stage(xs[0], useq[0]).value;
    for (std::size_t k = 1; k < n; ++k) {
        total += costs.delta(xs[k], useq[k]).value;
    }
    return total + costs.gamma(xs[n]).value;
}

double v_econ(const SystemModel& model, const EconomicCostParams& params, const Sequence& useq, const Vector& x0)
{
    const Sequence xs = model.rollout(x0, useq);
    double total = 0.0;
    for (std::size_t k = 0; k < useq.size(); ++k) {
        total += econ_stage_cost(params, xs[k], useq[k]);
    }
    return total;
}

double v_tracking(const SystemModel& model, const CostSuite& costs, const Sequence& useq, const Vector& x0)
{
    const Sequence xs = model.rollout(x0, useq);
    double total = 0.0;
    for (std::size_t k = 0; k < useq.size(); ++k) {
        total += costs.tracking_stage(xs[k], useq[k]).value;
    }
    return total + costs.terminal(xs[useq.size()]).value;
}

double energy_kwh(const std::vector<double>& power_series, double dt)
{
    if (!(dt > 0.0)) {
        throw UsageError("energy_kwh: dt must be positive");
    }
    double total = 0.0;
    for (double p : power_series) {
        total += p * dt / 3600.0;
    }
    return total;
}

} // namespace empc
