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
#ifndef EMPC_HARNESS_HPP
#define EMPC_HARNESS_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "empc/controller.hpp"

namespace empc {

struct SimConfig {
    Vector x0;
    int steps = 144;
    ControllerConfig controller;
    std::uint64_t seed = 0;
    std::string output_path;
};

enum MonitorId { kM1Feasibility = 0, kM2Monotone, kM3XiDecrease, kM4JDeltaConverged, kM5AverageCost, kM6ValueOrder };
inline constexpr int kMonitorCount = 6;
/// CSV column names of the monitors, in MonitorId order.
extern const std::array<const char*, kMonitorCount> kMonitorColumns;

struct StepRecord {
    int t = 0;
    Vector x;
    Vector u;
    double v_delta = 0.0;
    double j_delta = 0.0;
    double v_econ = 0.0;
    double le_inst = 0.0;
    double level_eta = 0.0;
    double level_xi = 0.0;
    double level_zeta = 0.0;
    std::string status;
    bool fallback = false;
    double max_violation = 0.0;
    int iterations = 0;
    /// Pointwise verdicts for M1, M2, M3, M6; verdict on the prefix 0..t for M4, M5.
    std::array<bool, kMonitorCount> monitors{true, true, true, true, true, true};
};

struct MonitorResult {
    std::string name;
    bool applicable = true;
    bool passed = true;
    /// Smallest slack seen (negative means violated); +inf when never evaluated.
    double worst_margin = std::numeric_limits<double>::infinity();
    int failures = 0;
    int first_failure = -1;
};

struct MonitorSettings {
    Scheme scheme = Scheme::kAlg1;
    int m = 1;
    double beta = 1.0;
    double tau = 0.6;
    double feas_tol = 1e-8;
    double le_steady = 0.0;
    double j_threshold = 1e-3;
    double average_tolerance = 0.02;
};

struct MonitorReport {
    std::array<MonitorResult, kMonitorCount> results;
    /// Per-record verdicts, same layout as StepRecord::monitors.
    std::vector<std::array<bool, kMonitorCount>> per_step;
    /// M1 and M6 always; M2 for alg1; M3 for alg2.
    bool mandatory_passed(Scheme scheme) const;
};

struct SimSummary {
    double total_energy_kwh = 0.0;
    Vector final_state;
    double final_distance = 0.0;
    /// First t with |x(t) - xs| <= 0.5, or -1.
    int time_to_half_degree = -1;
    std::vector<double> average_cost;
    int fallback_count = 0;
    bool aborted = false;
    std::string abort_reason;
};

struct SimLog {
    std::string label;
    ControllerConfig controller;
    double dt = 0.0;
    Vector xs;
    Vector us;
    double le_steady = 0.0;
    std::vector<StepRecord> records;
    SimSummary summary;
    MonitorReport monitors;
};

/// Closed loop over `steps` samples. A hard infeasibility ends the run early with the partial log kept.
SimLog simulate(std::shared_ptr<const HorizonContext> context, const SimConfig& config);

MonitorSettings monitor_settings_for(const SimLog& log);
MonitorReport monitor_suite(const SimLog& log, const MonitorSettings& settings);

/// Cumulative mean of the instantaneous economic cost.
std::vector<double> average_cost_series(const SimLog& log);

void write_csv(const SimLog& log, const std::string& path);
std::string to_csv(const SimLog& log);
/// Records only; summary and metadata are not part of the CSV. The solver
/// diagnostics (max_violation, iterations) follow the monitor columns and are optional on input.
std::vector<StepRecord> read_csv(const std::string& path);
std::vector<StepRecord> parse_csv(const std::string& text);

} // namespace empc

#endif // EMPC_HARNESS_HPP
