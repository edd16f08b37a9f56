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
#ifndef EMPC_COSTS_HPP
#define EMPC_COSTS_HPP

#include "empc/common.hpp"
#include "empc/dynamics.hpp"

namespace empc {

/// Tracking weights for l(x,u) = |x-xs|_Q^2 + |u-us|_R^2 and l_f(x) = |x-xs|_P^2.
struct TrackingWeights {
    Matrix q;
    Matrix r;
    Matrix p;

    /// Throws UsageError unless Q, R, P are symmetric positive definite.
    void validate() const;
};

/// Parameters of the HVAC electrical power model.
struct EconomicCostParams {
    double kappa_bar = 1.0;
    double eta_c = 4.0;
    double eta_h = 0.9;
    Vector th = Vector::Constant(2, 32.0);
    Vector ts = Vector::Constant(2, 15.0);
    double cp = 1.012;

    void validate() const;
};

/// delta(x,u) = delta_coeff (|x-xs|^2 + |u-us|^2), gamma(x) = gamma_coeff |x-xs|^2.
struct PenaltySpec {
    double delta_coeff = 1e-4;
    double gamma_coeff = 1e-4;

    void validate() const;
};

/// Value with gradients with respect to the state and control arguments.
struct StageValue {
    double value = 0.0;
    Vector dx;
    Vector du;
};

struct TrackingValue {
    double stage = 0.0;
    double terminal = 0.0;
};

/// Electrical power [kW]: kappa (sum u)^3 + 1/eta_c sum u cp |ts-x| + 1/eta_h sum u cp |th-x|.
double econ_stage_cost(const EconomicCostParams& params, const Vector& x, const Vector& u);

/// Gradient uses the sign of (x - ts) and (th - x), i.e. the smooth branch on [ts, th].
StageValue econ_stage_cost_with_gradient(const EconomicCostParams& params, const Vector& x, const Vector& u);

TrackingValue tracking_costs(const TrackingWeights& weights, const Vector& xs, const Vector& us, const Vector& x,
                             const Vector& u);

/**
 * @brief Bundle of every cost ingredient around one steady state (xs, us).
 *
 * `weights.p` may be left empty until terminal synthesis has run; terminal
 * quantities then throw.
 */
struct CostSuite {
    EconomicCostParams econ;
    TrackingWeights weights;
    PenaltySpec penalties;
    Vector xs;
    Vector us;

    StageValue econ_stage(const Vector& x, const Vector& u) const;
    StageValue tracking_stage(const Vector& x, const Vector& u) const;
    StageValue terminal(const Vector& x) const;
    StageValue delta(const Vector& x, const Vector& u) const;
    StageValue gamma(const Vector& x) const;
};

/// Modified tracking value: sum_k (l + k delta)(x_k,u_k) + l_f(x_N) along the rollout from x0.
double v_delta(const SystemModel& model, const CostSuite& costs, const Sequence& useq, const Vector& x0);

/// l(x_0,u_0) + sum_{k=1}^{N-1} delta(x_k,u_k) + gamma(x_N).
double j_delta(const SystemModel& model, const CostSuite& costs, const Sequence& useq, const Vector& x0);

/// Sum of the economic stage cost over k = 0..N-1 (no terminal economic term).
double v_econ(const SystemModel& model, const EconomicCostParams& params, const Sequence& useq, const Vector& x0);

/// Standard tracking value sum_k l(x_k,u_k) + l_f(x_N).
double v_tracking(const SystemModel& model, const CostSuite& costs, const Sequence& useq, const Vector& x0);

/// Integrate a per-step power series [kW] sampled every dt seconds into kWh.
double energy_kwh(const std::vector<double>& power_series, double dt);

} // namespace empc

#endif // EMPC_COSTS_HPP
