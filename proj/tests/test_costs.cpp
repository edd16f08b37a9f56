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
#include <random>

#include <gtest/gtest.h>

#include "empc/costs.hpp"
#include "fixtures.hpp"

namespace empc {
namespace {

using testing::vec2;

// Term-by-term recomputation kept independent of the library formula.
double power_by_hand(double kappa, double x1, double x2, double u1, double u2)
{
    const double fan = kappa * (u1 + u2) * (u1 + u2) * (u1 + u2);
    const double cool = u1 * 1.012 * std::fabs(15.0 - x1) / 4.0 + u2 * 1.012 * std::fabs(15.0 - x2) / 4.0;
    const double heat = u1 * 1.012 * std::fabs(32.0 - x1) / 0.9 + u2 * 1.012 * std::fabs(32.0 - x2) / 0.9;
    return fan + cool + heat;
}

TEST(EconomicCost, ZeroFlowIsFree)
{
    EXPECT_DOUBLE_EQ(econ_stage_cost(EconomicCostParams{}, vec2(27.0, 21.0), Vector::Zero(2)), 0.0);
}

TEST(EconomicCost, SteadyStateValue)
{
    EconomicCostParams p;
    for (double kappa : {0.0, 1.0, 2.5}) {
        p.kappa_bar = kappa;
        const double v = econ_stage_cost(p, vec2(24.0, 25.0), vec2(0.4646, 0.4020));
        EXPECT_NEAR(v, power_by_hand(kappa, 24.0, 25.0, 0.4646, 0.4020), 1e-12);
        EXPECT_NEAR(v, 9.419 + 0.651 * kappa, 2e-3);
    }
}

TEST(EconomicCost, LinearInKappa)
{
    EconomicCostParams p;
    p.kappa_bar = 0.7;
    const Vector x = vec2(26.0, 23.0);
    const Vector u = vec2(0.9, 1.3);
    const double base = econ_stage_cost(p, x, u);
    p.kappa_bar = 1.4;
    EXPECT_NEAR(econ_stage_cost(p, x, u) - base, 0.7 * std::pow(2.2, 3), 1e-12);
}

TEST(EconomicCost, MatchesHandComputationOnRandomPoints)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> temp(10.0, 40.0);
    std::uniform_real_distribution<double> flow(0.0, 3.2);
    EconomicCostParams p;
    p.kappa_bar = 0.3;
    for (int i = 0; i < 200; ++i) {
        const double x1 = temp(rng), x2 = temp(rng), u1 = flow(rng), u2 = flow(rng);
        const double v = econ_stage_cost(p, vec2(x1, x2), vec2(u1, u2));
        EXPECT_NEAR(v, power_by_hand(0.3, x1, x2, u1, u2), 1e-12);
        EXPECT_GE(v, 0.0);
    }
}

TEST(EconomicCost, GradientMatchesCentralDifferences)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> temp(16.0, 31.0); // between ts and th: smooth branch
    std::uniform_real_distribution<double> flow(0.0, 1.6);
    EconomicCostParams p;
    p.kappa_bar = 0.8;
    for (int i = 0; i < 50; ++i) {
        const Vector x = vec2(temp(rng), temp(rng));
        const Vector u = vec2(flow(rng), flow(rng));
        const StageValue g = econ_stage_cost_with_gradient(p, x, u);
        const double h = 1e-6;
        for (int j = 0; j < 2; ++j) {
            const Vector e = Vector::Unit(2, j) * h;
            EXPECT_NEAR(g.dx(j), (econ_stage_cost(p, x + e, u) - econ_stage_cost(p, x - e, u)) / (2 * h), 1e-6);
            EXPECT_NEAR(g.du(j), (econ_stage_cost(p, x, u + e) - econ_stage_cost(p, x, u - e)) / (2 * h), 1e-6);
        }
    }
}

TEST(EconomicCost, ValidatesParameters)
{
    EconomicCostParams p;
    p.eta_c = 0.0;
    EXPECT_THROW(p.validate(), UsageError);
    p = EconomicCostParams{};
    p.kappa_bar = -1.0;
    EXPECT_THROW(p.validate(), UsageError);
}

TEST(TrackingCost, ZeroAtSetPoint)
{
    TrackingWeights w{Matrix::Identity(2, 2), Matrix::Identity(2, 2), 2.0 * Matrix::Identity(2, 2)};
    const TrackingValue v = tracking_costs(w, vec2(24, 25), vec2(0.4, 0.5), vec2(24, 25), vec2(0.4, 0.5));
    EXPECT_DOUBLE_EQ(v.stage, 0.0);
    EXPECT_DOUBLE_EQ(v.terminal, 0.0);
}

TEST(TrackingCost, HandArithmetic)
{
    TrackingWeights w{Matrix::Identity(2, 2), Matrix::Identity(2, 2), 2.0 * Matrix::Identity(2, 2)};
    EXPECT_DOUBLE_EQ(tracking_costs(w, vec2(0, 0), vec2(0, 0), vec2(1, 0), vec2(0, 2)).stage, 5.0);
    EXPECT_DOUBLE_EQ(tracking_costs(w, vec2(0, 0), vec2(0, 0), vec2(1, 1), vec2(0, 0)).terminal, 4.0);
}

TEST(TrackingWeights, RejectIndefinite)
{
    TrackingWeights w{Matrix::Identity(2, 2), -Matrix::Identity(2, 2), Matrix()};
    EXPECT_THROW(w.validate(), UsageError);
    w.r = Matrix::Identity(2, 2);
    w.q(0, 1) = 0.5; // asymmetric
    EXPECT_THROW(w.validate(), UsageError);
}

TEST(PenaltySpec, RequiresStrictPositivity)
{
    EXPECT_NO_THROW(PenaltySpec{}.validate());
    EXPECT_THROW((PenaltySpec{0.0, 1e-4}).validate(), UsageError);
    EXPECT_THROW((PenaltySpec{1e-4, 0.0}).validate(), UsageError);
}

class ValueFunctions : public ::testing::Test {
protected:
    SystemModel model = testing::hvac_system();
    CostSuite costs = [this] {
        CostSuite c = testing::hvac_costs(model);
        c.weights.p = 2.0 * Matrix::Identity(2, 2);
        return c;
    }();
};

TEST_F(ValueFunctions, SingleStepHasNoDeltaTerm)
{
    const Vector x0 = vec2(26.0, 27.0);
    const Vector u0 = vec2(0.7, 0.8);
    const Vector x1 = model.step(x0, u0);
    const double expected = costs.tracking_stage(x0, u0).value + costs.terminal(x1).value;
    EXPECT_DOUBLE_EQ(v_delta(model, costs, {u0}, x0), expected);
}

TEST_F(ValueFunctions, ExplicitSums)
{
    const Vector x0 = vec2(29.0, 27.0);
    const Sequence useq{vec2(1.0, 0.8), vec2(0.9, 0.7), vec2(0.6, 0.6), vec2(0.5, 0.45)};
    const Sequence xs = model.rollout(x0, useq);
    auto sq = [](const Vector& v) { return v.squaredNorm(); };
    double vd = 0.0;
    double track = 0.0;
    double jd = sq(xs[0] - costs.xs) + sq(useq[0] - costs.us);
    for (int k = 0; k < 4; ++k) {
        const double l = sq(xs[k] - costs.xs) + sq(useq[k] - costs.us);
        const double d = 1e-4 * l;
        vd += l + k * d;
        track += l;
        if (k > 0) {
            jd += d;
        }
    }
    vd += 2.0 * sq(xs[4] - costs.xs);
    track += 2.0 * sq(xs[4] - costs.xs);
    jd += 1e-4 * sq(xs[4] - costs.xs);
    EXPECT_NEAR(v_delta(model, costs, useq, x0), vd, 1e-10);
    EXPECT_NEAR(j_delta(model, costs, useq, x0), jd, 1e-10);
    EXPECT_NEAR(v_tracking(model, costs, useq, x0), track, 1e-10);
}

TEST_F(ValueFunctions, SteadyTrajectoryValues)
{
    const Sequence useq(5, costs.us);
    EXPECT_NEAR(j_delta(model, costs, useq, costs.xs), 0.0, 1e-20);
    EXPECT_NEAR(v_delta(model, costs, useq, costs.xs), 0.0, 1e-20);
    EXPECT_NEAR(v_econ(model, costs.econ, useq, costs.xs), 5.0 * econ_stage_cost(costs.econ, costs.xs, costs.us),
                1e-12);
    EXPECT_DOUBLE_EQ(v_econ(model, costs.econ, Sequence(5, Vector::Zero(2)), vec2(30.0, 30.0)), 0.0);
}

TEST_F(ValueFunctions, VDeltaDominatesJDelta)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> flow(0.0, 1.5);
    std::uniform_real_distribution<double> temp(18.0, 32.0);
    for (int i = 0; i < 100; ++i) {
        Sequence useq;
        for (int k = 0; k < 5; ++k) {
            useq.push_back(vec2(flow(rng), flow(rng)));
        }
        const Vector x0 = vec2(temp(rng), temp(rng));
        const double v = v_delta(model, costs, useq, x0);
        const double j = j_delta(model, costs, useq, x0);
        EXPECT_GE(j, 0.0);
        EXPECT_GE(v, j);
    }
}

TEST(Energy, Integration)
{
    EXPECT_DOUBLE_EQ(energy_kwh({}, 600.0), 0.0);
    EXPECT_DOUBLE_EQ(energy_kwh({6.0, 6.0}, 600.0), 2.0);
    EXPECT_NEAR(energy_kwh(std::vector<double>(144, 10.0), 600.0), 240.0, 1e-12);
    EXPECT_THROW(energy_kwh({1.0}, 0.0), UsageError);
}

} // namespace
} // namespace empc
