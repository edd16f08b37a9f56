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
#include "empc/harness.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <cctype>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace empc {

const std::array<const char*, kMonitorCount> kMonitorColumns = {
    "m1_feasibility", "m2_monotone", "m3_xi_decrease", "m4_jdelta_converged", "m5_average_cost", "m6_value_order"};

namespace {

const std::array<const char*, kMonitorCount> kMonitorNames = {
    "M1 feasibility", "M2 monotone V^delta", "M3 m-step xi decrease", "M4 J^delta converged", "M5 average cost",
    "M6 V^delta >= J^delta >= 0"};

void note(MonitorResult& r, int t, double margin)
{
    r.worst_margin = std::min(r.worst_margin, margin);
    if (margin < 0.0) {
        r.passed = false;
        ++r.failures;
        if (r.first_failure < 0) {
            r.first_failure = t;
        }
    }
}

} // namespace

bool MonitorReport::mandatory_passed(Scheme scheme) const
{
    bool ok = results[kM1Feasibility].passed && results[kM6ValueOrder].passed;
    if (scheme == Scheme::kAlg1) {
        ok = ok && results[kM2Monotone].passed;
    }
    if (scheme == Scheme::kAlg2) {
        ok = ok && results[kM3XiDecrease].passed;
    }
    return ok;
}

std::vector<double> average_cost_series(const SimLog& log)
{
    std::vector<double> out;
    out.reserve(log.records.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < log.records.size(); ++i) {
        sum += log.records[i].le_inst;
        out.push_back(sum / static_cast<double>(i + 1));
    }
    return out;
}

MonitorSettings monitor_settings_for(const SimLog& log)
{
    MonitorSettings s;
    s.scheme = log.controller.scheme;
    s.m = log.controller.scheme == Scheme::kAlg2 ? log.controller.m : 1;
    s.beta = log.controller.beta;
    s.tau = log.controller.tau;
    s.feas_tol = log.controller.nlp.feas_tol;
    s.le_steady = log.le_steady;
    return s;
}

MonitorReport monitor_suite(const SimLog& log, const MonitorSettings& s)
{
    MonitorReport rep;
    for (int i = 0; i < kMonitorCount; ++i) {
        rep.results[static_cast<std::size_t>(i)].name = kMonitorNames[static_cast<std::size_t>(i)];
    }
    rep.results[kM3XiDecrease].applicable = s.scheme == Scheme::kAlg2;
    const auto& recs = log.records;
    const std::size_t n = recs.size();
    rep.per_step.assign(n, {true, true, true, true, true, true});
    const double tol = s.feas_tol;

    if (log.summary.aborted) {
        note(rep.results[kM1Feasibility], static_cast<int>(n), -1.0);
    }
    const double c = std::min(1.0 - s.tau, s.beta);
    double j_sum_window = 0.0;
    double le_sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const StepRecord& r = recs[t];
        const int ti = static_cast<int>(t);
        auto mark = [&](MonitorId id, double margin) {
            note(rep.results[id], ti, margin);
            rep.per_step[t][id] = margin >= 0.0;
        };
        mark(kM1Feasibility, tol - r.max_violation);
        if (t > 0) {
            mark(kM2Monotone, recs[t - 1].v_delta + tol - r.v_delta);
        }
        if (rep.results[kM3XiDecrease].applicable && ti >= 2 * s.m) {
            const StepRecord& prev = recs[t - static_cast<std::size_t>(s.m)];
            mark(kM3XiDecrease, prev.level_xi - c * prev.j_delta + tol - r.level_xi);
        }
        mark(kM6ValueOrder, std::min(r.v_delta - r.j_delta, r.j_delta) + tol);

        // Prefix verdicts: what M4 and M5 would report had the run ended at t.
        const std::size_t window = std::max<std::size_t>(1, (t + 1) / 4);
        j_sum_window = 0.0;
        for (std::size_t k = t + 1 - window; k <= t; ++k) {
            j_sum_window += recs[k].j_delta;
        }
        rep.per_step[t][kM4JDeltaConverged] = j_sum_window / static_cast<double>(window) < s.j_threshold;
        le_sum += r.le_inst;
        const double avg_limit = s.le_steady + s.average_tolerance * std::abs(s.le_steady) + tol;
        rep.per_step[t][kM5AverageCost] = le_sum / static_cast<double>(t + 1) <= avg_limit;
    }

    if (n > 0) {
        const std::size_t window = std::max<std::size_t>(1, n / 4);
        double mean = 0.0;
        for (std::size_t k = n - window; k < n; ++k) {
            mean += recs[k].j_delta;
        }
        mean /= static_cast<double>(window);
        note(rep.results[kM4JDeltaConverged], static_cast<int>(n) - 1, s.j_threshold - mean);
        const double avg_limit = s.le_steady + s.average_tolerance * std::abs(s.le_steady) + tol;
        note(rep.results[kM5AverageCost], static_cast<int>(n) - 1, avg_limit - le_sum / static_cast<double>(n));
    }
    return rep;
}

SimLog simulate(std::shared_ptr<const HorizonContext> context, const SimConfig& config)
{
    if (!context) {
        throw UsageError("simulate: missing horizon context");
    }
    if (config.steps < 1) {
        throw UsageError("simulate: steps must be >= 1");
    }
    const HorizonContext& ctx = *context;
    require_dim(config.x0, ctx.model.n_x(), "simulate: x0");
    if (!ctx.model.state_in_box(config.x0, 0.0)) {
        throw UsageError("simulate: x0 lies outside the state box");
    }
    Controller controller(context, config.controller);

    SimLog log;
    log.label = config.controller.label();
    log.controller = config.controller;
    log.dt = ctx.model.dt();
    log.xs = ctx.costs.xs;
    log.us = ctx.costs.us;
    log.le_steady = econ_stage_cost(ctx.costs.econ, ctx.costs.xs, ctx.costs.us);
    log.records.reserve(static_cast<std::size_t>(config.steps));

    Vector x = config.x0;
    for (int t = 0; t < config.steps; ++t) {
        StepOutput out;
        try {
            out = controller.step(x);
        } catch (const HardInfeasibilityError& e) {
            spdlog::error("{}: run aborted: {}", log.label, e.what());
            log.summary.aborted = true;
            log.summary.abort_reason = e.what();
            break;
        }
        StepRecord r;
        r.t = t;
        r.x = x;
        r.u = out.u;
        r.v_delta = out.v_delta;
        r.j_delta = out.j_delta;
        r.v_econ = out.v_econ;
        r.le_inst = econ_stage_cost(ctx.costs.econ, x, out.u);
        r.level_eta = out.eta;
        r.level_xi = out.xi;
        r.level_zeta = out.zeta;
        r.status = to_string(out.status);
        r.fallback = out.fallback;
        r.max_violation = out.max_violation;
        r.iterations = out.iterations;
        log.records.push_back(std::move(r));
        x = ctx.model.step(x, out.u);
    }

    SimSummary& sum = log.summary;
    sum.final_state = x;
    sum.final_distance = (x - log.xs).norm();
    std::vector<double> power;
    power.reserve(log.records.size());
    for (const StepRecord& r : log.records) {
        power.push_back(r.le_inst);
        if (sum.time_to_half_degree < 0 && (r.x - log.xs).norm() <= 0.5) {
            sum.time_to_half_degree = r.t;
        }
    }
    sum.total_energy_kwh = energy_kwh(power, log.dt);
    sum.average_cost = average_cost_series(log);
    sum.fallback_count = controller.state().fallback_count;

    log.monitors = monitor_suite(log, monitor_settings_for(log));
    for (std::size_t t = 0; t < log.records.size(); ++t) {
        log.records[t].monitors = log.monitors.per_step[t];
    }
    if (!config.output_path.empty()) {
        write_csv(log, config.output_path);
    }
    return log;
}

std::string to_csv(const SimLog& log)
{
    std::ostringstream os;
    const Eigen::Index n_x = log.records.empty() ? log.xs.size() : log.records.front().x.size();
    const Eigen::Index n_u = log.records.empty() ? log.us.size() : log.records.front().u.size();
    os << "t";
    for (Eigen::Index i = 0; i < n_x; ++i) {
        os << ",x" << i + 1;
    }
    for (Eigen::Index i = 0; i < n_u; ++i) {
        os << ",u" << i + 1;
    }
    os << ",v_delta,j_delta,v_econ,le_inst,level_eta,level_xi,level_zeta,status,fallback";
    for (const char* name : kMonitorColumns) {
        os << ',' << name;
    }
    os << ",max_violation,iterations\n";
    for (const StepRecord& r : log.records) {
        os << r.t;
        for (Eigen::Index i = 0; i < r.x.size(); ++i) {
            os << ',' << fmt::format("{:.17g}", r.x(i));
        }
        for (Eigen::Index i = 0; i < r.u.size(); ++i) {
            os << ',' << fmt::format("{:.17g}", r.u(i));
        }
        for (double v : {r.v_delta, r.j_delta, r.v_econ, r.le_inst, r.level_eta, r.level_xi, r.level_zeta}) {
            os << ',' << fmt::format("{:.17g}", v);
        }
        os << ',' << r.status << ',' << (r.fallback ? 1 : 0);
        for (bool ok : r.monitors) {
            os << ',' << (ok ? 1 : 0);
        }
        os << ',' << fmt::format("{:.17g}", r.max_violation) << ',' << r.iterations << '\n';
    }
    return os.str();
}

void write_csv(const SimLog& log, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot open '{}' for writing", path));
    }
    out << to_csv(log);
    if (!out) {
        throw std::runtime_error(fmt::format("failed writing '{}'", path));
    }
}

namespace {

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double parse_double(const std::string& s, int line)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw UsageError(fmt::format("csv line {}: '{}' is not a number", line, s));
    }
    return v;
}

} // namespace

std::vector<StepRecord> parse_csv(const std::string& text)
{
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) {
        throw UsageError("csv: empty input");
    }
    const std::vector<std::string> header = split(line);
    std::vector<int> x_cols;
    std::vector<int> u_cols;
    std::map<std::string, int> col;
    for (int i = 0; i < static_cast<int>(header.size()); ++i) {
        const std::string& h = header[static_cast<std::size_t>(i)];
        col[h] = i;
        if (h.size() > 1 && h[0] == 'x' && std::isdigit(static_cast<unsigned char>(h[1]))) {
            x_cols.push_back(i);
        } else if (h.size() > 1 && h[0] == 'u' && std::isdigit(static_cast<unsigned char>(h[1]))) {
            u_cols.push_back(i);
        }
    }
    auto need = [&](const std::string& name) {
        const auto it = col.find(name);
        if (it == col.end()) {
            throw UsageError(fmt::format("csv: missing column '{}'", name));
        }
        return it->second;
    };
    const int c_t = need("t");
    const int c_v = need("v_delta");
    const int c_j = need("j_delta");
    const int c_ve = need("v_econ");
    const int c_le = need("le_inst");
    const int c_eta = need("level_eta");
    const int c_xi = need("level_xi");
    const int c_zeta = need("level_zeta");
    const int c_status = need("status");
    const int c_fb = need("fallback");
    std::array<int, kMonitorCount> c_mon{};
    for (int i = 0; i < kMonitorCount; ++i) {
        c_mon[static_cast<std::size_t>(i)] = need(kMonitorColumns[static_cast<std::size_t>(i)]);
    }
    const auto opt_col = [&](const std::string& name) {
        const auto it = col.find(name);
        return it == col.end() ? -1 : it->second;
    };
    const int c_viol = opt_col("max_violation");
    const int c_iter = opt_col("iterations");

    std::vector<StepRecord> out;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::vector<std::string> cells = split(line);
        if (cells.size() != header.size()) {
            throw UsageError(fmt::format("csv line {}: expected {} fields, found {}", line_no, header.size(),
                                         cells.size()));
        }
        auto num = [&](int c) { return parse_double(cells[static_cast<std::size_t>(c)], line_no); };
        StepRecord r;
        r.t = static_cast<int>(num(c_t));
        r.x.resize(static_cast<Eigen::Index>(x_cols.size()));
        for (std::size_t i = 0; i < x_cols.size(); ++i) {
            r.x(static_cast<Eigen::Index>(i)) = num(x_cols[i]);
        }
        r.u.resize(static_cast<Eigen::Index>(u_cols.size()));
        for (std::size_t i = 0; i < u_cols.size(); ++i) {
            r.u(static_cast<Eigen::Index>(i)) = num(u_cols[i]);
        }
        r.v_delta = num(c_v);
        r.j_delta = num(c_j);
        r.v_econ = num(c_ve);
        r.le_inst = num(c_le);
        r.level_eta = num(c_eta);
        r.level_xi = num(c_xi);
        r.level_zeta = num(c_zeta);
        r.status = cells[static_cast<std::size_t>(c_status)];
        r.fallback = num(c_fb) != 0.0;
        for (int i = 0; i < kMonitorCount; ++i) {
            r.monitors[static_cast<std::size_t>(i)] = num(c_mon[static_cast<std::size_t>(i)]) != 0.0;
        }
        if (c_viol >= 0) {
            r.max_violation = num(c_viol);
        }
        if (c_iter >= 0) {
            r.iterations = static_cast<int>(num(c_iter));
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<StepRecord> read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw UsageError(fmt::format("cannot open '{}'", path));
    }
    std::ostringstream os;
    os << in.rdbuf();
    return parse_csv(os.str());
}

} // namespace empc
