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
#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>

#include "empc/harness.hpp"
#include "fixtures.hpp"

namespace empc {
namespace {

using testing::hvac;
using testing::vec2;

SimConfig sim_for(Scheme scheme, int m, const Vector& x0, int steps)
{
    SimConfig c;
    c.x0 = x0;
    c.steps = steps;
    c.controller.scheme = scheme;
    c.controller.m = m;
    c.controller.v_max = compute_v_max(hvac().model, hvac().costs, hvac().terminal, 5, 0).bound;
    return c;
}

const SimLog& alg2_log()
{
    static const SimLog log = simulate(hvac().context, sim_for(Scheme::kAlg2, 3, vec2(31.0, 30.0), 40));
    return log;
}

TEST(Simulate, SteadyStartStaysPut)
{
    const SimLog log = simulate(hvac().context, sim_for(Scheme::kTracking, 2, hvac().costs.xs, 20));
    ASSERT_EQ(log.records.size(), 20U);
    for (const StepRecord& r : log.records) {
        EXPECT_LT((r.x - log.xs).norm(), 1e-6);
        EXPECT_LT((r.u - log.us).norm(), 1e-6);
        EXPECT_NEAR(r.le_inst, log.le_steady, 1e-6);
    }
    for (const MonitorResult& m : log.monitors.results) {
        EXPECT_TRUE(m.passed) << m.name;
    }
    EXPECT_FALSE(log.summary.aborted);
    EXPECT_EQ(log.summary.time_to_half_degree, 0);
}

TEST(Simulate, RejectsBadConfigs)
{
    SimConfig c = sim_for(Scheme::kAlg1, 2, vec2(31.0, 30.0), 0);
    EXPECT_THROW(simulate(hvac().context, c), UsageError);
    c.steps = 5;
    c.x0 = vec2(40.0, 30.0);
    EXPECT_THROW(simulate(hvac().context, c), UsageError);
    EXPECT_THROW(simulate(nullptr, c), UsageError);
}

TEST(Simulate, SingleStep)
{
    const SimLog log = simulate(hvac().context, sim_for(Scheme::kAlg2, 2, vec2(31.0, 30.0), 1));
    ASSERT_EQ(log.records.size(), 1U);
    EXPECT_EQ(log.records[0].t, 0);
    EXPECT_EQ(log.summary.final_state, hvac().model.step(vec2(31.0, 30.0), log.records[0].u));
    // Too short for the m-step check to be evaluated.
    EXPECT_TRUE(log.monitors.results[kM3XiDecrease].passed);
    EXPECT_TRUE(std::isinf(log.monitors.results[kM3XiDecrease].worst_margin));
}

TEST(Simulate, SummaryIsConsistent)
{
    const SimLog& log = alg2_log();
    std::vector<double> power;
    for (const StepRecord& r : log.records) {
        power.push_back(r.le_inst);
        EXPECT_NEAR(r.le_inst, econ_stage_cost(hvac().costs.econ, r.x, r.u), 1e-12);
    }
    EXPECT_DOUBLE_EQ(log.summary.total_energy_kwh, energy_kwh(power, log.dt));
    EXPECT_DOUBLE_EQ(log.summary.final_distance, (log.summary.final_state - log.xs).norm());
    for (std::size_t t = 1; t < log.records.size(); ++t) {
        const StepRecord& prev = log.records[t - 1];
        EXPECT_EQ(log.records[t].x, hvac().model.step(prev.x, prev.u));
    }
}

TEST(Simulate, AverageCostSeries)
{
    const SimLog& log = alg2_log();
    const std::vector<double> avg = average_cost_series(log);
    ASSERT_EQ(avg.size(), log.records.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < avg.size(); ++t) {
        sum += log.records[t].le_inst;
        EXPECT_NEAR(avg[t], sum / static_cast<double>(t + 1), 1e-12);
    }
    EXPECT_EQ(log.summary.average_cost, avg);
}

TEST(Simulate, IsDeterministic)
{
    const SimLog again = simulate(hvac().context, sim_for(Scheme::kAlg2, 3, vec2(31.0, 30.0), 40));
    EXPECT_EQ(to_csv(again), to_csv(alg2_log()));
}

TEST(Simulate, TrackingSettlesBeforeLongPeriod)
{
    const SimLog tracking = simulate(hvac().context, sim_for(Scheme::kTracking, 2, vec2(31.0, 30.0), 144));
    const SimLog m8 = simulate(hvac().context, sim_for(Scheme::kAlg2, 8, vec2(31.0, 30.0), 144));
    ASSERT_GE(tracking.summary.time_to_half_degree, 0);
    const int m8_time = m8.summary.time_to_half_degree < 0 ? 1000 : m8.summary.time_to_half_degree;
    EXPECT_LT(tracking.summary.time_to_half_degree, m8_time);
    EXPECT_LT(m8.summary.total_energy_kwh, tracking.summary.total_energy_kwh);
}

TEST(Monitors, Alg2RunPassesMandatorySet)
{
    const SimLog& log = alg2_log();
    EXPECT_TRUE(log.monitors.mandatory_passed(Scheme::kAlg2));
    EXPECT_TRUE(log.monitors.results[kM3XiDecrease].applicable);
    EXPECT_LT(log.monitors.results[kM3XiDecrease].worst_margin, std::numeric_limits<double>::infinity());
    for (const StepRecord& r : log.records) {
        EXPECT_TRUE(r.monitors[kM1Feasibility]);
        EXPECT_TRUE(r.monitors[kM6ValueOrder]);
    }
}

TEST(Monitors, CorruptedXiIsFlaggedAtTheStep)
{
    SimLog log = alg2_log();
    const int bad = 11;
    const StepRecord& ref = log.records[bad - 3];
    // Just past the allowed level xi_{s-m} - min(1 - tau, beta) J_{s-m}.
    log.records[bad].level_xi = ref.level_xi - 0.4 * ref.j_delta + 1e-6;
    const MonitorReport rep = monitor_suite(log, monitor_settings_for(log));
    const MonitorResult& m3 = rep.results[kM3XiDecrease];
    EXPECT_FALSE(m3.passed);
    EXPECT_EQ(m3.first_failure, bad);
    EXPECT_EQ(m3.failures, 1);
    EXPECT_FALSE(rep.per_step[bad][kM3XiDecrease]);
    EXPECT_FALSE(rep.mandatory_passed(Scheme::kAlg2));
}

TEST(Monitors, CorruptedValuesTripM1M2M6)
{
    SimLog log = alg2_log();
    log.records[5].max_violation = 1e-3;
    log.records[7].v_delta = log.records[6].v_delta + 1.0;
    log.records[9].j_delta = log.records[9].v_delta + 1.0;
    MonitorSettings s = monitor_settings_for(log);
    s.scheme = Scheme::kAlg1;
    const MonitorReport rep = monitor_suite(log, s);
    EXPECT_EQ(rep.results[kM1Feasibility].first_failure, 5);
    EXPECT_EQ(rep.results[kM2Monotone].first_failure, 7);
    EXPECT_EQ(rep.results[kM6ValueOrder].first_failure, 9);
    EXPECT_FALSE(rep.results[kM3XiDecrease].applicable);
    EXPECT_FALSE(rep.mandatory_passed(Scheme::kAlg1));
}

TEST(Monitors, PrefixVerdictsMatchTruncatedRuns)
{
    const SimLog& log = alg2_log();
    for (std::size_t t : {std::size_t{0}, std::size_t{9}, std::size_t{25}, log.records.size() - 1}) {
        SimLog cut = log;
        cut.records.resize(t + 1);
        const MonitorReport rep = monitor_suite(cut, monitor_settings_for(cut));
        EXPECT_EQ(rep.results[kM4JDeltaConverged].passed, log.monitors.per_step[t][kM4JDeltaConverged]) << t;
        EXPECT_EQ(rep.results[kM5AverageCost].passed, log.monitors.per_step[t][kM5AverageCost]) << t;
    }
}

TEST(Csv, RoundTripIsExact)
{
    const SimLog& log = alg2_log();
    const std::vector<StepRecord> back = parse_csv(to_csv(log));
    ASSERT_EQ(back.size(), log.records.size());
    auto same = [](double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; };
    for (std::size_t t = 0; t < back.size(); ++t) {
        const StepRecord& a = log.records[t];
        const StepRecord& b = back[t];
        EXPECT_EQ(a.t, b.t);
        EXPECT_EQ(a.x, b.x);
        EXPECT_EQ(a.u, b.u);
        EXPECT_TRUE(same(a.v_delta, b.v_delta));
        EXPECT_TRUE(same(a.j_delta, b.j_delta));
        EXPECT_TRUE(same(a.v_econ, b.v_econ));
        EXPECT_TRUE(same(a.le_inst, b.le_inst));
        EXPECT_TRUE(same(a.level_eta, b.level_eta));
        EXPECT_TRUE(same(a.level_xi, b.level_xi));
        EXPECT_TRUE(same(a.level_zeta, b.level_zeta));
        EXPECT_EQ(a.status, b.status);
        EXPECT_EQ(a.fallback, b.fallback);
        EXPECT_EQ(a.max_violation, b.max_violation);
        EXPECT_EQ(a.iterations, b.iterations);
        EXPECT_EQ(a.monitors, b.monitors);
    }
}

TEST(Csv, ReplayReproducesTrajectory)
{
    const SimLog& log = alg2_log();
    const auto path = std::filesystem::temp_directory_path() / "empc_replay_test.csv";
    write_csv(log, path.string());
    const std::vector<StepRecord> recs = read_csv(path.string());
    std::filesystem::remove(path);
    Vector x = recs.front().x;
    for (std::size_t t = 0; t < recs.size(); ++t) {
        EXPECT_LT((x - recs[t].x).norm(), 1e-12);
        x = hvac().model.step(recs[t].x, recs[t].u);
    }
}

TEST(Csv, MissingColumnIsReported)
{
    std::string text = to_csv(alg2_log());
    const auto pos = text.find("v_delta");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 7, "v_other");
    try {
        parse_csv(text);
        FAIL() << "expected UsageError";
    } catch (const UsageError& e) {
        EXPECT_NE(std::string(e.what()).find("v_delta"), std::string::npos);
    }
    EXPECT_THROW(parse_csv(""), UsageError);
    EXPECT_THROW(read_csv("/nonexistent/run.csv"), UsageError);
}

} // namespace
} // namespace empc
