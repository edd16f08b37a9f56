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
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "empc/horizon.hpp"
#include "empc/sampling.hpp"
#include "fixtures.hpp"

namespace empc {
namespace {

using testing::hvac;
using testing::vec2;

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector steady_z(const HorizonContext& ctx)
{
    Vector z(ctx.n_vars());
    for (int k = 0; k < ctx.horizon; ++k) {
        z.segment(2 * k, 2) = ctx.costs.us;
    }
    return z;
}

Vector random_z(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> flow(0.0, 1.5);
    Vector z(10);
    for (int i = 0; i < 10; ++i) {
        z(i) = flow(rng);
    }
    return z;
}

LyapunovLevels all_levels(double eta, double xi, double zeta)
{
    LyapunovLevels l;
    l.eta = eta;
    l.xi = xi;
    l.zeta = zeta;
    return l;
}

TEST(Horizon, KindNamesRoundTrip)
{
    for (HorizonKind k : {HorizonKind::kTracking, HorizonKind::kEconPlain, HorizonKind::kEconEta,
                          HorizonKind::kEconXiZeta, HorizonKind::kEconZeta, HorizonKind::kFeasibility}) {
        EXPECT_EQ(horizon_kind_from_string(to_string(k)), k);
    }
    EXPECT_THROW(horizon_kind_from_string("econ-omega"), UsageError);
}

TEST(Horizon, ProblemShape)
{
    const auto& inst = hvac();
    const Vector x0 = vec2(31.0, 30.0);
    const Vector z0 = steady_z(*inst.context);
    const LyapunovLevels lv = all_levels(10.0, 10.0, 10.0);
    // 5 coupling rows, 20 box rows (x_0..x_4), 1 terminal row.
    struct Case {
        HorizonKind kind;
        int rows;
    };
    for (const Case& c : {Case{HorizonKind::kTracking, 26}, Case{HorizonKind::kEconPlain, 26},
                          Case{HorizonKind::kEconEta, 27}, Case{HorizonKind::kEconXiZeta, 28},
                          Case{HorizonKind::kEconZeta, 27}, Case{HorizonKind::kFeasibility, 25}}) {
        const NlpSpec spec = build_horizon_problem(inst.context, c.kind, x0, lv, z0);
        EXPECT_EQ(spec.n_vars, 10);
        EXPECT_EQ(spec.n_eq, 0);
        EXPECT_EQ(spec.n_ineq, c.rows) << to_string(c.kind);
        EXPECT_EQ(spec.lower, Vector::Zero(10));
        EXPECT_TRUE(spec.upper.allFinite());
        EXPECT_EQ(spec.ineq_constraints(z0, nullptr).size(), c.rows);
    }
}

TEST(Horizon, MissingLevelIsUsageError)
{
    const auto& inst = hvac();
    const Vector z0 = steady_z(*inst.context);
    EXPECT_THROW(build_horizon_problem(inst.context, HorizonKind::kEconEta, vec2(31, 30), {}, z0), UsageError);
    LyapunovLevels only_xi;
    only_xi.xi = 1.0;
    EXPECT_THROW(build_horizon_problem(inst.context, HorizonKind::kEconXiZeta, vec2(31, 30), only_xi, z0),
                 UsageError);
}

TEST(Horizon, InfiniteEtaEqualsPlainEconomic)
{
    const auto& inst = hvac();
    const Vector x0 = vec2(31.0, 30.0);
    const Vector z0 = steady_z(*inst.context);
    const NlpSpec plain = build_horizon_problem(inst.context, HorizonKind::kEconPlain, x0, {}, z0);
    const NlpSpec eta = build_horizon_problem(inst.context, HorizonKind::kEconEta, x0, all_levels(kInf, 0, 0), z0);
    ASSERT_EQ(eta.n_ineq, plain.n_ineq);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20; ++i) {
        const Vector z = random_z(rng);
        EXPECT_EQ(plain.objective(z, nullptr), eta.objective(z, nullptr));
        EXPECT_EQ(plain.ineq_constraints(z, nullptr), eta.ineq_constraints(z, nullptr));
    }
}

TEST(Horizon, LyapunovRowValues)
{
    const auto& inst = hvac();
    const Vector x0 = vec2(26.0, 27.0);
    const Vector z0 = steady_z(*inst.context);
    const LyapunovLevels lv = all_levels(50.0, 40.0, 30.0);
    const NlpSpec xz = build_horizon_problem(inst.context, HorizonKind::kEconXiZeta, x0, lv, z0);
    const HorizonEvaluation ev = evaluate_horizon(*inst.context, x0, z0, false);
    const Vector c = xz.ineq_constraints(z0, nullptr);
    EXPECT_NEAR(c(26), ev.v_delta - 40.0, 1e-12);
    EXPECT_NEAR(c(27), ev.v_delta - ev.j_delta - 30.0, 1e-12);
    const NlpSpec eta = build_horizon_problem(inst.context, HorizonKind::kEconEta, x0, lv, z0);
    EXPECT_NEAR(eta.ineq_constraints(z0, nullptr)(26), ev.v_delta - 50.0, 1e-12);
    EXPECT_NEAR(xz.objective(z0, nullptr), ev.v_econ, 1e-12);
}

TEST(Horizon, ValuesMatchCostModule)
{
    const auto& inst = hvac();
    const CostSuite suite = with_terminal(inst.costs, inst.terminal);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 20; ++i) {
        const Vector z = random_z(rng);
        const Vector x0 = vec2(22.0 + i * 0.4, 30.0 - i * 0.2);
        const Sequence useq = unstack(z, 5);
        const HorizonEvaluation ev = evaluate_horizon(*inst.context, x0, z, false);
        EXPECT_NEAR(ev.v_delta, v_delta(inst.model, suite, useq, x0), 1e-10);
        EXPECT_NEAR(ev.j_delta, j_delta(inst.model, suite, useq, x0), 1e-10);
        EXPECT_NEAR(ev.v_tracking, v_tracking(inst.model, suite, useq, x0), 1e-10);
        EXPECT_NEAR(ev.v_econ, v_econ(inst.model, suite.econ, useq, x0), 1e-10);
        EXPECT_NEAR(ev.terminal_level, inst.terminal.level(ev.states.back()), 1e-10);
    }
}

TEST(Horizon, GradientsMatchFiniteDifferences)
{
    const auto& inst = hvac();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> temp(18.0, 32.0);
    auto rel = [](const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1.0, b.norm()); };
    for (int i = 0; i < 100; ++i) {
        const Vector x0 = vec2(temp(rng), temp(rng));
        const Vector z = random_z(rng);
        const HorizonEvaluation ev = evaluate_horizon(*inst.context, x0, z, true);
        Vector fd_v(10), fd_j(10), fd_e(10), fd_t(10), fd_l(10);
        for (int j = 0; j < 10; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(z(j)));
            Vector zp = z;
            Vector zm = z;
            zp(j) += h;
            zm(j) -= h;
            const HorizonEvaluation p = evaluate_horizon(*inst.context, x0, zp, false);
            const HorizonEvaluation m = evaluate_horizon(*inst.context, x0, zm, false);
            fd_v(j) = (p.v_delta - m.v_delta) / (2 * h);
            fd_j(j) = (p.j_delta - m.j_delta) / (2 * h);
            fd_e(j) = (p.v_econ - m.v_econ) / (2 * h);
            fd_t(j) = (p.v_tracking - m.v_tracking) / (2 * h);
            fd_l(j) = (p.terminal_level - m.terminal_level) / (2 * h);
        }
        EXPECT_LT(rel(ev.grad_v_delta, fd_v), 1e-5);
        EXPECT_LT(rel(ev.grad_j_delta, fd_j), 1e-5);
        EXPECT_LT(rel(ev.grad_v_econ, fd_e), 1e-5);
        EXPECT_LT(rel(ev.grad_v_tracking, fd_t), 1e-5);
        EXPECT_LT(rel(ev.grad_terminal_level, fd_l), 1e-5);
    }
}

TEST(Horizon, AnalyticAndFiniteDifferenceModesAgree)
{
    const auto& inst = hvac();
    auto fd_ctx = std::make_shared<const HorizonContext>(inst.model, inst.costs, inst.terminal, 5,
                                                         Differentiation::kFiniteDifference);
    const Vector x0 = vec2(29.0, 28.0);
    const LyapunovLevels lv = all_levels(100.0, 100.0, 100.0);
    std::mt19937_64 rng(6);
    for (int i = 0; i < 10; ++i) {
        const Vector z = random_z(rng);
        const NlpSpec a = build_horizon_problem(inst.context, HorizonKind::kEconXiZeta, x0, lv, z);
        const NlpSpec f = build_horizon_problem(fd_ctx, HorizonKind::kEconXiZeta, x0, lv, z);
        Vector ga;
        Vector gf;
        EXPECT_EQ(a.objective(z, &ga), f.objective(z, &gf));
        EXPECT_LT((ga - gf).norm(), 1e-5 * std::max(1.0, ga.norm()));
        Matrix ja;
        Matrix jf;
        a.ineq_constraints(z, &ja);
        f.ineq_constraints(z, &jf);
        EXPECT_LT((ja - jf).norm(), 1e-5 * std::max(1.0, ja.norm()));
    }
}

TEST(Horizon, SensitivitiesOfFirstState)
{
    const auto& inst = hvac();
    const HorizonEvaluation ev = evaluate_horizon(*inst.context, vec2(30, 30), steady_z(*inst.context), true);
    ASSERT_EQ(ev.sensitivities.size(), 6U);
    EXPECT_EQ(ev.sensitivities[0], Matrix::Zero(2, 10));
    // x_1 depends only on u_0, through the input matrix.
    Matrix fx;
    Matrix fu;
    inst.model.jacobians(vec2(30, 30), inst.costs.us, fx, fu);
    EXPECT_LT((ev.sensitivities[1].leftCols(2) - fu).norm(), 1e-14);
    EXPECT_EQ(ev.sensitivities[1].rightCols(8), Matrix::Zero(2, 8));
}

TEST(WarmStart, SteadySequenceIsFixed)
{
    const auto& inst = hvac();
    const Sequence prev(5, inst.costs.us);
    const Sequence next = warm_start_shift(prev, inst.costs.xs, inst.terminal);
    ASSERT_EQ(next.size(), 5U);
    for (const Vector& u : next) {
        EXPECT_EQ(u, inst.costs.us);
    }
}

TEST(WarmStart, DropsFirstAndAppendsTerminalLaw)
{
    const auto& inst = hvac();
    Sequence prev;
    for (int k = 0; k < 5; ++k) {
        prev.push_back(vec2(0.1 * k, 0.2 * k));
    }
    const Vector xn = vec2(24.3, 24.8);
    const Sequence next = warm_start_shift(prev, xn, inst.terminal);
    for (int k = 0; k < 4; ++k) {
        EXPECT_EQ(next[k], prev[k + 1]);
    }
    EXPECT_EQ(next[4], inst.terminal.kappa(xn));
    EXPECT_THROW(warm_start_shift({}, xn, inst.terminal), UsageError);
}

TEST(WarmStart, ShiftDecreasesModifiedValue)
{
    // V(x+, u+) - V(x, u) <= -J(x, u) on feasible pairs ending in the terminal set.
    const auto& inst = hvac();
    const CostSuite suite = with_terminal(inst.costs, inst.terminal);
    const auto pairs = sample_feasible_pairs(inst.model, inst.terminal, 5, 200, 99);
    ASSERT_EQ(pairs.size(), 200U);
    double worst = -kInf;
    for (const FeasiblePair& p : pairs) {
        const Sequence xs = inst.model.rollout(p.x0, p.useq);
        ASSERT_TRUE(inst.terminal.contains(xs.back(), 1e-12));
        for (int k = 0; k < 5; ++k) {
            ASSERT_TRUE(inst.model.input_in_set(p.useq[k], 1e-12));
            ASSERT_TRUE(inst.model.state_in_box(xs[k], 1e-12));
        }
        const Vector x_plus = xs[1];
        const Sequence u_plus = warm_start_shift(p.useq, xs.back(), inst.terminal);
        const double lhs = v_delta(inst.model, suite, u_plus, x_plus) - v_delta(inst.model, suite, p.useq, p.x0);
        const double rhs = -j_delta(inst.model, suite, p.useq, p.x0);
        worst = std::max(worst, lhs - rhs);
        EXPECT_LE(lhs, rhs + 1e-9);
    }
    RecordProperty("worst_shift_gap", std::to_string(worst));
}

TEST(VMax, SeparableClosedForm)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 5;
        Vector c(n), lo(n), hi(n);
        double expected = 0.0;
        for (int i = 0; i < n; ++i) {
            c(i) = u(rng);
            lo(i) = u(rng);
            hi(i) = lo(i) + std::abs(u(rng));
            expected += std::max((lo(i) - c(i)) * (lo(i) - c(i)), (hi(i) - c(i)) * (hi(i) - c(i)));
        }
        EXPECT_NEAR(box_quadratic_max(Matrix::Identity(n, n), c, lo, hi), expected, 1e-12 * (1 + expected));
    }
}

TEST(VMax, SingletonAndUnboundedBoxes)
{
    const Matrix w = (Matrix(2, 2) << 2, 0.5, 0.5, 1).finished();
    const Vector c = vec2(1, -1);
    const Vector v = vec2(3, 2);
    const Vector d = v - c;
    EXPECT_NEAR(box_quadratic_max(w, c, v, v), d.dot(w * d), 1e-14);
    EXPECT_EQ(box_quadratic_max(w, c, vec2(0, 0), vec2(kInf, 1)), kInf);
}

TEST(VMax, DominatesGridSamples)
{
    const Matrix w = (Matrix(2, 2) << 2, -0.7, -0.7, 1).finished();
    const Vector c = vec2(0.3, 0.1);
    const Vector lo = vec2(-1, -2);
    const Vector hi = vec2(2, 0.5);
    const double bound = box_quadratic_max(w, c, lo, hi);
    double grid = 0.0;
    for (int i = 0; i <= 60; ++i) {
        for (int j = 0; j <= 60; ++j) {
            const Vector v = lo + (hi - lo).cwiseProduct(vec2(i / 60.0, j / 60.0));
            grid = std::max(grid, (v - c).dot(w * (v - c)));
        }
    }
    EXPECT_GE(bound, grid);
    EXPECT_NEAR(bound, grid, 1e-12); // corners are on the grid
}

TEST(VMax, CaseStudyBound)
{
    const auto& inst = hvac();
    const VMaxReport r = compute_v_max(inst.model, inst.costs, inst.terminal, 5, 2000);
    EXPECT_NEAR(r.bound, 5 * r.stage_max + 10 * r.delta_max + r.terminal_max, 1e-9 * r.bound);
    EXPECT_LE(r.terminal_max, inst.terminal.alpha);
    EXPECT_GT(r.samples, 0);
    EXPECT_LE(r.sampled_max, r.bound);
    // With xi = V_max the xi row never binds at any sampled feasible point.
    EXPECT_GT(r.bound, r.sampled_max);
}

TEST(VMax, LargeXiReducesToZetaProblem)
{
    const auto& inst = hvac();
    const VMaxReport r = compute_v_max(inst.model, inst.costs, inst.terminal, 5, 0);
    const Vector x0 = vec2(25.0, 26.0);
    const Vector z0 = steady_z(*inst.context);
    LyapunovLevels lv = all_levels(kInf, r.bound, 20.0);
    const NlpSpec xz = build_horizon_problem(inst.context, HorizonKind::kEconXiZeta, x0, lv, z0);
    const NlpSpec zo = build_horizon_problem(inst.context, HorizonKind::kEconZeta, x0, lv, z0);
    const NlpResult a = solve(xz);
    const NlpResult b = solve(zo);
    ASSERT_TRUE(a.feasible(1e-8));
    ASSERT_TRUE(b.feasible(1e-8));
    EXPECT_NEAR(a.objective, b.objective, 1e-6);
    EXPECT_LT((a.x - b.x).norm(), 1e-3);
}

} // namespace
} // namespace empc
