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
#ifndef EMPC_CONTROLLER_HPP
#define EMPC_CONTROLLER_HPP

#include <deque>
#include <memory>
#include <optional>
#include <string>

#include "empc/horizon.hpp"
#include "empc/nlp.hpp"

namespace empc {

enum class Scheme { kTracking, kAlg1, kAlg2 };

const char* to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

struct ControllerConfig {
    Scheme scheme = Scheme::kAlg1;
    int horizon = 5;
    /// Decrease period; only read for alg2.
    int m = 2;
    double beta = 1.0;
    double tau = 0.6;
    /// Initial xi/zeta level for alg2. Required for alg2.
    std::optional<double> v_max;
    NlpOptions nlp;
    /// Warm starts violating their rows by more than this are not used as fallbacks.
    double warm_start_tol = 1e-6;

    void validate() const;
    /// "tracking", "alg1" or "alg2-m<m>".
    std::string label() const;
};

/**
 * @brief Mutable controller memory.
 *
 * At the start of step t, xi_history holds xi_{t-m}..xi_{t-1} and, once
 * update_zeta has run, zeta_history holds zeta_{t-m+1}..zeta_t.
 */
struct ControllerState {
    int t = 0;
    Sequence prev_useq;
    Vector prev_x_n;
    double prev_vdelta = 0.0;
    double prev_jdelta = 0.0;
    std::deque<double> zeta_history;
    std::deque<double> xi_history;
    int fallback_count = 0;
};

/// V^delta - beta J^delta of the previous accepted solution.
double update_eta(const ControllerState& state, double beta);
double update_zeta(const ControllerState& state, double beta);
/// max(tau xi_{t-m}, zeta_{t-m+1}) for t >= m, v_max before.
double update_xi(const ControllerState& state, const ControllerConfig& config);

struct StepOutput {
    Vector u;
    Sequence useq;
    Sequence states;
    double v_delta = 0.0;
    double j_delta = 0.0;
    double v_econ = 0.0;
    double v_tracking = 0.0;
    /// NaN when the scheme does not use the level.
    double eta = 0.0;
    double xi = 0.0;
    double zeta = 0.0;
    HorizonKind kind = HorizonKind::kEconPlain;
    NlpStatus status = NlpStatus::kInfeasible;
    bool fallback = false;
    double max_violation = 0.0;
    int iterations = 0;
};

/// Neither the solver nor the warm start produced a feasible sequence.
class HardInfeasibilityError : public NumericalError {
public:
    HardInfeasibilityError(const std::string& what, int t, double violation)
        : NumericalError(what), t_(t), violation_(violation)
    {
    }
    int t() const { return t_; }
    double violation() const { return violation_; }

private:
    int t_;
    double violation_;
};

class Controller {
public:
    Controller(std::shared_ptr<const HorizonContext> context, ControllerConfig config);

    /// Solve the scheme's problem at x and advance the internal state.
    StepOutput step(const Vector& x);

    const ControllerState& state() const { return state_; }
    const ControllerConfig& config() const { return config_; }
    const HorizonContext& context() const { return *ctx_; }

private:
    Sequence initial_guess(const Vector& x) const;

    std::shared_ptr<const HorizonContext> ctx_;
    ControllerConfig config_;
    ControllerState state_;
};

} // namespace empc

#endif // EMPC_CONTROLLER_HPP
