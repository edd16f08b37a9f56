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
#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "empc/controller.hpp"
#include "fixtures.hpp"

namespace empc {
namespace {

using testing::hvac;
using testing::vec2;

double case_study_v_max()
{
    static const double v = compute_v_max(hvac().model, hvac().costs, hvac().terminal, 5, 0).bound;
    return v;
}

ControllerConfig config_for(Scheme scheme, int m = 2)
{
    ControllerConfig c;
    c.scheme = scheme;
    c.m = m;
    c.v_max = case_study_v_max();
    return c;
}

TEST(Levels, EtaAndZetaExamples)
{
    ControllerState s;
    EXPECT_THROW(update_eta(s, 1.0), UsageError);
    EXPECT_THROW(update_zeta(s, 1.0), UsageError);
    s.t = 3;
    s.prev_vdelta = 10.0;
    s.prev_jdelta = 3.0;
    EXPECT_DOUBLE_EQ(update_eta(s, 1.0), 7.0);
    EXPECT_DOUBLE_EQ(update_eta(s, 0.5), 8.5);
    EXPECT_DOUBLE_EQ(update_zeta(s, 0.5), 8.5);
    s.prev_vdelta = 0.0;
    s.prev_jdelta = 0.0;
    EXPECT_EQ(update_eta(s, 1.0), 0.0);
}

TEST(Levels, XiExamples)
{
    ControllerConfig c = config_for(Scheme::kAlg2, 2);
    c.tau = 0.6;
    c.v_max = 500.0;
    ControllerState s;
    s.t = 1;
    EXPECT_EQ(update_xi(s, c), 500.0);
    s.t = 2;
    s.xi_history = {100.0, 90.0};
    s.zeta_history = {50.0, 40.0};
    EXPECT_DOUBLE_EQ(update_xi(s, c), 60.0);
    s.zeta_history = {70.0, 40.0};
    EXPECT_DOUBLE_EQ(update_xi(s, c), 70.0);
    s.xi_history = {100.0};
    EXPECT_THROW(update_xi(s, c), std::logic_error);
    c.v_max.reset();
    s.t = 0;
    EXPECT_THROW(update_xi(s, c), UsageError);
}

TEST(Config, Validation)
{
    ControllerConfig c;
    EXPECT_NO_THROW(c.validate());
    c.beta = 0.0;
    EXPECT_THROW(c.validate(), UsageError);
    c.beta = 1.0;
    c.tau = 1.0;
    EXPECT_THROW(c.validate(), UsageError);
    c.tau = 0.6;
    c.scheme = Scheme::kAlg2;
    EXPECT_THROW(c.validate(), UsageError); // no v_max
    c.v_max = 10.0;
    c.m = 1;
    EXPECT_THROW(c.validate(), UsageError);
    c.m = 8;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.label(), "alg2-m8");
    EXPECT_EQ(config_for(Scheme::kAlg1).label(), "alg1");
    EXPECT_EQ(config_for(Scheme::kTracking).label(), "tracking");
    for (Scheme s : {Scheme::kTracking, Scheme::kAlg1, Scheme::kAlg2}) {
        EXPECT_EQ(scheme_from_string(to_string(s)), s);
    }
    EXPECT_THROW(scheme_from_string("alg3"), UsageError);
}

TEST(Controller, HorizonMustMatchContext)
{
    ControllerConfig c = config_for(Scheme::kAlg1);
    c.horizon = 6;
    EXPECT_THROW(Controller(hvac().context, c), UsageError);
}

TEST(Controller, TrackingAtSteadyStateHolds)
{
    Controller ctrl(hvac().context, config_for(Scheme::kTracking));
    Vector x = hvac().costs.xs;
    for (int t = 0; t < 5; ++t) {
        const StepOutput out = ctrl.step(x);
        EXPECT_LT((out.u - hvac().costs.us).norm(), 1e-6);
        EXPECT_LT(out.v_tracking, 1e-10);
        x = hvac().model.step(x, out.u);
    }
    EXPECT_LT((x - hvac().costs.xs).norm(), 1e-6);
}

TEST(Controller, EconomicPlanFromSteadyStateIsNoWorse)
{
    // The steady sequence is feasible at x_s, so the economic optimum can only be cheaper.
    // It need not stay at x_s: letting the zones drift inside X_f saves energy.
    const auto& inst = hvac();
    const double steady_cost = 5.0 * econ_stage_cost(inst.costs.econ, inst.costs.xs, inst.costs.us);
    for (const ControllerConfig& c : {config_for(Scheme::kAlg1), config_for(Scheme::kAlg2, 2)}) {
        Controller ctrl(inst.context, c);
        Vector x = inst.costs.xs;
        for (int t = 0; t < 6; ++t) {
            const StepOutput out = ctrl.step(x);
            if (t == 0) {
                EXPECT_LE(out.v_econ, steady_cost + 1e-9) << c.label();
            } else if (c.scheme == Scheme::kAlg1) {
                EXPECT_LE(out.v_delta, out.eta + c.nlp.feas_tol);
            } else {
                EXPECT_LE(out.v_delta - c.beta * out.j_delta, out.zeta + c.nlp.feas_tol);
            }
            EXPECT_TRUE(inst.terminal.contains(out.states.back(), 1e-8));
            x = inst.model.step(x, out.u);
        }
    }
}

TEST(Controller, Alg1ValueIsMonotone)
{
    const ControllerConfig c = config_for(Scheme::kAlg1);
    Controller ctrl(hvac().context, c);
    Vector x = vec2(31.0, 30.0);
    double prev_v = 0.0;
    double prev_j = 0.0;
    for (int t = 0; t < 10; ++t) {
        const StepOutput out = ctrl.step(x);
        EXPECT_EQ(out.kind, HorizonKind::kEconEta);
        if (t == 0) {
            EXPECT_TRUE(std::isinf(out.eta));
        } else {
            EXPECT_DOUBLE_EQ(out.eta, prev_v - prev_j);
            EXPECT_LE(out.v_delta, out.eta + c.nlp.feas_tol);
            EXPECT_LE(out.v_delta, prev_v + c.nlp.feas_tol);
        }
        EXPECT_TRUE(std::isnan(out.xi));
        EXPECT_TRUE(std::isnan(out.zeta));
        EXPECT_LE(out.max_violation, c.nlp.feas_tol);
        prev_v = out.v_delta;
        prev_j = out.j_delta;
        x = hvac().model.step(x, out.u);
    }
}

TEST(Controller, Alg2ProblemKindsAndBookkeeping)
{
    const int m = 4;
    const ControllerConfig c = config_for(Scheme::kAlg2, m);
    Controller ctrl(hvac().context, c);
    Vector x = vec2(31.0, 30.0);
    std::vector<double> xi;
    std::vector<double> zeta;
    double prev_v = 0.0;
    double prev_j = 0.0;
    for (int t = 0; t < 14; ++t) {
        const StepOutput out = ctrl.step(x);
        xi.push_back(out.xi);
        zeta.push_back(out.zeta);
        if (t == 0) {
            EXPECT_EQ(out.kind, HorizonKind::kEconPlain);
            EXPECT_EQ(out.zeta, *c.v_max);
        } else {
            EXPECT_EQ(out.kind, t < m ? HorizonKind::kEconZeta : HorizonKind::kEconXiZeta);
            EXPECT_DOUBLE_EQ(out.zeta, prev_v - c.beta * prev_j);
            EXPECT_LE(out.v_delta - c.beta * out.j_delta, out.zeta + c.nlp.feas_tol);
        }
        if (t < m) {
            EXPECT_EQ(out.xi, *c.v_max);
        } else {
            EXPECT_DOUBLE_EQ(out.xi, std::max(c.tau * xi[t - m], zeta[t - m + 1]));
            EXPECT_LE(out.v_delta, out.xi + c.nlp.feas_tol);
        }
        EXPECT_TRUE(std::isnan(out.eta));
        EXPECT_LE(static_cast<int>(ctrl.state().xi_history.size()), m);
        EXPECT_LE(static_cast<int>(ctrl.state().zeta_history.size()), m);
        EXPECT_EQ(ctrl.state().t, t + 1);
        prev_v = out.v_delta;
        prev_j = out.j_delta;
        x = hvac().model.step(x, out.u);
    }
}

TEST(Controller, StarvedSolverStaysFeasible)
{
    // One SQP iteration per step: the shifted warm start keeps every step feasible.
    // The start is close enough for the repeated steady input to be a feasible first guess.
    ControllerConfig c = config_for(Scheme::kAlg2, 3);
    c.nlp.max_iter = 1;
    Controller ctrl(hvac().context, c);
    Vector x = vec2(24.4, 25.3);
    for (int t = 0; t < 12; ++t) {
        StepOutput out;
        ASSERT_NO_THROW(out = ctrl.step(x)) << "t=" << t;
        EXPECT_LE(out.max_violation, c.warm_start_tol);
        x = hvac().model.step(x, out.u);
    }
}

TEST(Controller, StepOutputIsConsistent)
{
    Controller ctrl(hvac().context, config_for(Scheme::kAlg1));
    const Vector x = vec2(29.0, 28.5);
    const StepOutput out = ctrl.step(x);
    ASSERT_EQ(out.useq.size(), 5U);
    ASSERT_EQ(out.states.size(), 6U);
    EXPECT_EQ(out.u, out.useq.front());
    EXPECT_EQ(out.states.front(), x);
    EXPECT_EQ(out.states, hvac().model.rollout(x, out.useq));
    EXPECT_TRUE(hvac().terminal.contains(out.states.back(), 1e-8));
    EXPECT_EQ(ctrl.state().prev_useq, out.useq);
    EXPECT_EQ(ctrl.state().prev_x_n, out.states.back());
}

} // namespace
} // namespace empc
