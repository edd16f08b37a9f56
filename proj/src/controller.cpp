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
#include "empc/controller.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "empc/sampling.hpp"

namespace empc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void push_bounded(std::deque<double>& history, double value, int capacity)
{
    history.push_back(value);
    while (static_cast<int>(history.size()) > capacity) {
        history.pop_front();
    }
}

} // namespace

const char* to_string(Scheme scheme)
{
    switch (scheme) {
    case Scheme::kTracking:
        return "tracking";
    case Scheme::kAlg1:
        return "alg1";
    case Scheme::kAlg2:
        return "alg2";
    }
    return "unknown";
}

Scheme scheme_from_string(const std::string& name)
{
    if (name == "tracking") {
        return Scheme::kTracking;
    }
    if (name == "alg1") {
        return Scheme::kAlg1;
    }
    if (name == "alg2") {
        return Scheme::kAlg2;
    }
    throw UsageError(fmt::format("unknown scheme '{}' (expected tracking, alg1 or alg2)", name));
}

void ControllerConfig::validate() const
{
    if (horizon < 1) {
        throw UsageError("controller: horizon must be >= 1");
    }
    if (!(beta > 0.0 && beta <= 1.0)) {
        throw UsageError("controller: beta must lie in (0, 1]");
    }
    if (!(tau >= 0.0 && tau < 1.0)) {
        throw UsageError("controller: tau must lie in [0, 1)");
    }
    if (scheme == Scheme::kAlg2) {
        if (m < 2) {
            throw UsageError("controller: alg2 requires m >= 2");
        }
        if (!v_max || !(*v_max > 0.0)) {
            throw UsageError("controller: alg2 requires a positive v_max");
        }
    }
    if (!(nlp.feas_tol > 0.0) || !(nlp.opt_tol > 0.0) || nlp.max_iter < 1) {
        throw UsageError("controller: solver tolerances must be positive and max_iter >= 1");
    }
}

std::string ControllerConfig::label() const
{
    if (scheme == Scheme::kAlg2) {
        return fmt::format("alg2-m{}", m);
    }
    return to_string(scheme);
}

double update_eta(const ControllerState& state, double beta)
{
    if (state.t < 1) {
        throw UsageError("update_eta: no previous solution at t = 0");
    }
    return state.prev_vdelta - beta * state.prev_jdelta;
}

double update_zeta(const ControllerState& state, double beta)
{
    if (state.t < 1) {
        throw UsageError("update_zeta: no previous solution at t = 0");
    }
    return state.prev_vdelta - beta * state.prev_jdelta;
}

double update_xi(const ControllerState& state, const ControllerConfig& config)
{
    if (state.t < config.m) {
        if (!config.v_max) {
            throw UsageError("update_xi: v_max not set");
        }
        return *config.v_max;
    }
    if (static_cast<int>(state.xi_history.size()) != config.m ||
        static_cast<int>(state.zeta_history.size()) != config.m) {
        throw std::logic_error(fmt::format("update_xi: history underflow at t = {} (xi {}, zeta {}, m {})", state.t,
                                           state.xi_history.size(), state.zeta_history.size(), config.m));
    }
    return std::max(config.tau * state.xi_history.front(), state.zeta_history.front());
}

Controller::Controller(std::shared_ptr<const HorizonContext> context, ControllerConfig config)
    : ctx_(std::move(context)), config_(std::move(config))
{
    if (!ctx_) {
        throw UsageError("Controller: missing horizon context");
    }
    config_.validate();
    if (config_.horizon != ctx_->horizon) {
        throw UsageError("Controller: horizon differs from the context horizon");
    }
}

Sequence Controller::initial_guess(const Vector& x) const
{
    const HorizonContext& ctx = *ctx_;
    const Vector us = project_to_input_set(ctx.model, ctx.costs.us);
    Sequence guess(static_cast<std::size_t>(ctx.horizon), us);
    const HorizonEvaluation e = evaluate_horizon(ctx, x, stack(guess), false);
    bool ok = ctx.terminal.contains(e.states.back());
    for (int k = 0; k < ctx.horizon && ok; ++k) {
        ok = ctx.model.state_in_box(e.states[static_cast<std::size_t>(k)], 0.0);
    }
    if (ok) {
        return guess;
    }
    // Feasibility phase: drive x_N into X_f.
    const NlpSpec spec =
        build_horizon_problem(ctx_, HorizonKind::kFeasibility, x, LyapunovLevels{}, stack(guess));
    const NlpResult res = solve(spec, config_.nlp);
    spdlog::debug("feasibility phase: l_f(x_N) = {:.6g} (alpha {:.6g}), status {}", res.objective,
                  ctx.terminal.alpha, to_string(res.status));
    return unstack(res.x, ctx.horizon);
}

StepOutput Controller::step(const Vector& x)
{
    require_dim(x, ctx_->model.n_x(), "Controller::step: state");
    const int t = state_.t;
    StepOutput out;
    out.eta = kNaN;
    out.xi = kNaN;
    out.zeta = kNaN;
    LyapunovLevels levels;
    levels.beta = config_.beta;

    switch (config_.scheme) {
    case Scheme::kTracking:
        out.kind = HorizonKind::kTracking;
        break;
    case Scheme::kAlg1:
        out.eta = t == 0 ? kInf : update_eta(state_, config_.beta);
        levels.eta = out.eta;
        out.kind = HorizonKind::kEconEta;
        break;
    case Scheme::kAlg2:
        out.zeta = t == 0 ? *config_.v_max : update_zeta(state_, config_.beta);
        push_bounded(state_.zeta_history, out.zeta, config_.m);
        out.xi = update_xi(state_, config_);
        push_bounded(state_.xi_history, out.xi, config_.m);
        if (t == 0) {
            out.kind = HorizonKind::kEconPlain;
        } else if (t < config_.m) {
            out.kind = HorizonKind::kEconZeta;
            levels.zeta = out.zeta;
        } else {
            out.kind = HorizonKind::kEconXiZeta;
            levels.xi = out.xi;
            levels.zeta = out.zeta;
        }
        break;
    }

    const Sequence warm = t == 0 ? initial_guess(x) : warm_start_shift(state_.prev_useq, state_.prev_x_n, ctx_->terminal);
    const Vector z_warm = stack(warm);
    const NlpSpec spec = build_horizon_problem(ctx_, out.kind, x, levels, z_warm);
    const double warm_violation = max_constraint_violation(spec, z_warm);
    const double warm_objective = spec.objective(z_warm, nullptr);
    const bool warm_ok = warm_violation <= config_.warm_start_tol;

    const NlpResult res = solve(spec, config_.nlp);
    out.status = res.status;
    out.iterations = res.iterations;
    const bool solver_ok = res.max_violation <= config_.nlp.feas_tol;
    const bool improves = res.objective <= warm_objective + 1e-12 * (1.0 + std::abs(warm_objective));

    Vector z;
    if (solver_ok && (!warm_ok || improves)) {
        z = res.x;
        out.max_violation = res.max_violation;
    } else if (warm_ok) {
        z = z_warm;
        out.max_violation = warm_violation;
        out.fallback = true;
        ++state_.fallback_count;
        spdlog::debug("t={}: solver {} (violation {:.3e}, objective {:.9g} vs warm {:.9g}); using warm start", t,
                      to_string(res.status), res.max_violation, res.objective, warm_objective);
    } else {
        throw HardInfeasibilityError(
            fmt::format("t={}: no feasible control sequence for {} at x = ({}); solver status {} with violation "
                        "{:.3e}, warm start violation {:.3e}",
                        t, to_string(out.kind), fmt::join(x.data(), x.data() + x.size(), ", "),
                        to_string(res.status), res.max_violation, warm_violation),
            t, std::min(res.max_violation, warm_violation));
    }

    const HorizonEvaluation e = evaluate_horizon(*ctx_, x, z, false);
    out.useq = unstack(z, ctx_->horizon);
    out.u = out.useq.front();
    out.states = e.states;
    out.v_delta = e.v_delta;
    out.j_delta = e.j_delta;
    out.v_econ = e.v_econ;
    out.v_tracking = e.v_tracking;

    state_.prev_useq = out.useq;
    state_.prev_x_n = e.states.back();
    state_.prev_vdelta = e.v_delta;
    state_.prev_jdelta = e.j_delta;
    ++state_.t;
    return out;
}

} // namespace empc
