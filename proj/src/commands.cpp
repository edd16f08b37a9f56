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
#include "empc/commands.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace empc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

json matrix_json(const Matrix& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        rows.push_back(to_std(m.row(i).transpose()));
    }
    return rows;
}

void log_notices(const Scenario& s)
{
    for (const std::string& n : s.notices) {
        if (n.rfind("warning:", 0) == 0) {
            spdlog::warn("{}", n.substr(9));
        } else {
            spdlog::info("{}", n);
        }
    }
}

json verdict_json(const TerminalVerdict& v)
{
    return {{"passed", v.passed},
            {"samples", v.samples},
            {"admissibility_margin", v.admissibility_margin},
            {"invariance_margin", v.invariance_margin},
            {"decrease_margin", v.decrease_margin},
            {"failed_check", v.failed_check},
            {"worst_point", to_std(v.worst_point)}};
}

json monitors_json(const MonitorReport& rep)
{
    json j = json::object();
    for (int i = 0; i < kMonitorCount; ++i) {
        const MonitorResult& r = rep.results[static_cast<std::size_t>(i)];
        j[kMonitorColumns[static_cast<std::size_t>(i)]] = {{"name", r.name},
                                                           {"applicable", r.applicable},
                                                           {"passed", r.passed},
                                                           {"worst_margin", std::isfinite(r.worst_margin) ? json(r.worst_margin) : json(nullptr)},
                                                           {"failures", r.failures},
                                                           {"first_failure", r.first_failure}};
    }
    return j;
}

// Map library exceptions onto exit codes; shared by every subcommand.
int guarded(const std::function<int()>& body)
{
    try {
        return body();
    } catch (const ScenarioError& e) {
        spdlog::error("invalid scenario: {}", e.what());
        return exit_code::kUsage;
    } catch (const UsageError& e) {
        spdlog::error("{}", e.what());
        return exit_code::kUsage;
    } catch (const SteadyStateError& e) {
        spdlog::error("{} (residual {:.3e})", e.what(), e.residual());
        return exit_code::kInfeasible;
    } catch (const HardInfeasibilityError& e) {
        spdlog::error("{}", e.what());
        return exit_code::kInfeasible;
    } catch (const SynthesisError& e) {
        spdlog::error("{}", e.what());
        return exit_code::kVerifyFailure;
    } catch (const VerificationFailure& e) {
        spdlog::error("{}", e.what());
        return exit_code::kVerifyFailure;
    }
}

template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn)
{
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1))));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t w = 1; w < workers; ++w) {
        threads.emplace_back(worker);
    }
    worker();
    for (auto& t : threads) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

const ControllerBlock* first_alg1(const Scenario& s)
{
    for (const ControllerBlock& c : s.controllers) {
        if (c.scheme == Scheme::kAlg1) {
            return &c;
        }
    }
    return nullptr;
}

} // namespace

Scenario apply_overrides(Scenario s, const CommandOptions& o)
{
    if (o.seed) {
        s.sim.seed = *o.seed;
        s.terminal.seed = *o.seed;
    }
    if (o.out_dir) {
        s.output_dir = *o.out_dir;
    }
    if (o.feas_tol) {
        if (!(*o.feas_tol > 0.0)) {
            throw UsageError("--feas-tol must be positive");
        }
        s.solver.nlp.feas_tol = *o.feas_tol;
        s.solver.warm_start_tol = std::max(s.solver.warm_start_tol, *o.feas_tol);
    }
    if (o.jobs < 1) {
        throw UsageError("--jobs must be >= 1");
    }
    return s;
}

PreparedProblem prepare_problem(const Scenario& s, int horizon, int verify_workers)
{
    SystemModel model = build_system(s);
    const SteadyState steady = solve_steady_state(model, s.costs.econ);
    CostSuite costs = build_costs(s, steady.xs, steady.us);
    TerminalOptions to;
    to.k_gain = s.terminal.k_gain;
    to.epsilon = s.terminal.epsilon;
    to.alpha_shrink = s.terminal.alpha_shrink;
    to.seed = s.terminal.seed;
    TerminalIngredients terminal = synthesize_terminal(model, costs, horizon, to);
    const TerminalVerdict verdict =
        verify_terminal(model, costs, terminal, horizon, s.terminal.verify_samples, s.terminal.seed + 4, verify_workers);
    if (!verdict.passed) {
        throw VerificationFailure(
            fmt::format("terminal verification failed: {} check, margin {:.3e} at ({})", verdict.failed_check,
                        std::min({verdict.admissibility_margin, verdict.invariance_margin, verdict.decrease_margin}),
                        fmt::join(to_std(verdict.worst_point), ", ")),
            verdict);
    }
    terminal.verified = verdict;
    const VMaxReport vmax = compute_v_max(model, costs, terminal, horizon, s.terminal.v_max_samples, s.terminal.seed + 16);
    return PreparedProblem{std::move(model), steady, costs, terminal, verdict, vmax};
}

RunResult run_scenario(const Scenario& s, const CommandOptions& options, bool write_files)
{
    std::map<int, std::shared_ptr<const HorizonContext>> contexts;
    std::map<int, PreparedProblem> prepared;
    for (const ControllerBlock& c : s.controllers) {
        if (!prepared.count(c.horizon)) {
            PreparedProblem p = prepare_problem(s, c.horizon, options.verify_workers);
            spdlog::info("N={}: x_s = ({}), u_s = ({}), alpha = {:.6g}, V_max bound = {:.6g}", c.horizon,
                         fmt::join(to_std(p.steady.xs), ", "), fmt::join(to_std(p.steady.us), ", "),
                         p.terminal.alpha, p.v_max.bound);
            contexts[c.horizon] = std::make_shared<const HorizonContext>(p.model, p.costs, p.terminal, c.horizon,
                                                                         s.solver.differentiation);
            prepared.emplace(c.horizon, std::move(p));
        }
    }
    if (write_files) {
        fs::create_directories(s.output_dir);
    }

    RunResult result;
    result.logs.resize(s.controllers.size());
    parallel_for(s.controllers.size(), options.jobs, [&](std::size_t i) {
        const ControllerBlock& block = s.controllers[i];
        SimConfig cfg;
        cfg.x0 = s.sim.x0;
        cfg.steps = s.sim.steps;
        cfg.seed = s.sim.seed;
        cfg.controller = build_controller_config(s, block);
        if (cfg.controller.scheme == Scheme::kAlg2 && !cfg.controller.v_max) {
            cfg.controller.v_max = prepared.at(block.horizon).v_max.bound;
        }
        if (write_files) {
            cfg.output_path = (fs::path(s.output_dir) / (block.label + ".csv")).string();
        }
        SimLog log = simulate(contexts.at(block.horizon), cfg);
        log.label = block.label;
        spdlog::info("{}: {:.3f} kWh, final distance {:.4f}, fallbacks {}{}", block.label,
                     log.summary.total_energy_kwh, log.summary.final_distance, log.summary.fallback_count,
                     log.summary.aborted ? " (aborted)" : "");
        result.logs[i] = std::move(log);
    });

    json runs = json::array();
    bool any_aborted = false;
    bool monitors_ok = true;
    for (std::size_t i = 0; i < result.logs.size(); ++i) {
        const SimLog& log = result.logs[i];
        const ControllerBlock& block = s.controllers[i];
        const bool mandatory = log.monitors.mandatory_passed(block.scheme);
        any_aborted = any_aborted || log.summary.aborted;
        monitors_ok = monitors_ok && mandatory;
        json r = {{"label", block.label},
                  {"scheme", to_string(block.scheme)},
                  {"horizon", block.horizon},
                  {"m", block.scheme == Scheme::kAlg2 ? block.m : 1},
                  {"beta", block.beta},
                  {"tau", block.tau},
                  {"v_max", log.controller.v_max ? json(*log.controller.v_max) : json(nullptr)},
                  {"steps", log.records.size()},
                  {"total_energy_kwh", log.summary.total_energy_kwh},
                  {"final_state", to_std(log.summary.final_state)},
                  {"final_distance", log.summary.final_distance},
                  {"time_to_half_degree", log.summary.time_to_half_degree},
                  {"final_average_cost", log.summary.average_cost.empty() ? 0.0 : log.summary.average_cost.back()},
                  {"le_steady", log.le_steady},
                  {"fallback_count", log.summary.fallback_count},
                  {"aborted", log.summary.aborted},
                  {"abort_reason", log.summary.abort_reason},
                  {"monitors", monitors_json(log.monitors)},
                  {"mandatory_monitors_passed", mandatory}};
        if (write_files) {
            r["csv"] = block.label + ".csv";
        }
        runs.push_back(r);
    }
    const PreparedProblem& first = prepared.begin()->second;
    result.summary = {{"steady_state",
                       {{"xs", to_std(first.steady.xs)},
                        {"us", to_std(first.steady.us)},
                        {"cost", first.steady.cost},
                        {"residual", first.steady.residual}}},
                      {"kappa_bar", s.costs.econ.kappa_bar},
                      {"dt_seconds", s.model.params.dt_seconds},
                      {"runs", runs}};
    json terminals = json::object();
    for (const auto& [n, p] : prepared) {
        json t = to_json(p.terminal);
        t["v_max_bound"] = p.v_max.bound;
        t["v_max_sampled"] = p.v_max.sampled_max;
        terminals[std::to_string(n)] = t;
    }
    result.summary["terminal"] = terminals;
    if (write_files) {
        std::ofstream out(fs::path(s.output_dir) / "summary.json");
        out << result.summary.dump(2) << '\n';
    }
    result.exit_code = any_aborted ? exit_code::kInfeasible
                                   : (monitors_ok ? exit_code::kOk : exit_code::kMonitorFailure);
    return result;
}

CalibrationResult calibrate_kappa(const Scenario& scenario, double target_kwh, double tolerance, double kappa_max)
{
    const ControllerBlock* block = first_alg1(scenario);
    if (!block) {
        throw UsageError("calibrate-kappa: the scenario has no alg1 controller");
    }
    if (!(target_kwh > 0.0) || !(tolerance > 0.0)) {
        throw UsageError("calibrate-kappa: target and tolerance must be positive");
    }
    PreparedProblem p = prepare_problem(scenario, block->horizon);
    const ControllerConfig ccfg = build_controller_config(scenario, *block);
    const bool square = p.model.n_u() == p.model.n_x();

    CalibrationResult res;
    auto energy = [&](double kappa) {
        Scenario s = scenario;
        s.costs.econ.kappa_bar = kappa;
        CostSuite costs = p.costs;
        costs.econ.kappa_bar = kappa;
        TerminalIngredients terminal = p.terminal;
        if (!square) {
            // The economic steady state moves with kappa only when it is not pinned by f(x_s,u) = x_s.
            PreparedProblem q = prepare_problem(s, block->horizon);
            costs = q.costs;
            terminal = q.terminal;
        }
        auto ctx = std::make_shared<const HorizonContext>(p.model, costs, terminal, block->horizon,
                                                          scenario.solver.differentiation);
        SimConfig cfg;
        cfg.x0 = scenario.sim.x0;
        cfg.steps = scenario.sim.steps;
        cfg.controller = ccfg;
        const SimLog log = simulate(ctx, cfg);
        ++res.evaluations;
        if (log.summary.aborted) {
            throw HardInfeasibilityError("calibrate-kappa: run aborted at kappa_bar = " + std::to_string(kappa) +
                                             ": " + log.summary.abort_reason,
                                         static_cast<int>(log.records.size()), 0.0);
        }
        spdlog::info("kappa_bar = {:.6g}: {:.4f} kWh", kappa, log.summary.total_energy_kwh);
        return log.summary.total_energy_kwh;
    };

    double lo = 0.0;
    double e_lo = energy(lo);
    if (e_lo > target_kwh + tolerance) {
        res.kappa_bar = lo;
        res.energy_kwh = e_lo;
        res.message = fmt::format("target {:.4f} kWh lies below the kappa_bar = 0 energy {:.4f} kWh", target_kwh, e_lo);
        return res;
    }
    if (std::abs(e_lo - target_kwh) <= tolerance) {
        res.bracketed = true;
        res.kappa_bar = lo;
        res.energy_kwh = e_lo;
        return res;
    }
    double hi = 1.0;
    double e_hi = energy(hi);
    while (e_hi < target_kwh - tolerance) {
        lo = hi;
        e_lo = e_hi;
        hi *= 2.0;
        if (hi > kappa_max) {
            res.kappa_bar = lo;
            res.energy_kwh = e_lo;
            res.message = fmt::format("no kappa_bar <= {} reaches {:.4f} kWh (got {:.4f})", kappa_max, target_kwh, e_lo);
            return res;
        }
        e_hi = energy(hi);
    }
    res.bracketed = true;
    if (std::abs(e_hi - target_kwh) <= tolerance) {
        res.kappa_bar = hi;
        res.energy_kwh = e_hi;
        return res;
    }
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double e_mid = energy(mid);
        res.kappa_bar = mid;
        res.energy_kwh = e_mid;
        if (std::abs(e_mid - target_kwh) <= tolerance) {
            return res;
        }
        (e_mid < target_kwh ? lo : hi) = mid;
    }
    res.bracketed = false;
    res.message = "bisection did not reach the tolerance; the energy is not monotone in kappa_bar here";
    return res;
}

int cmd_run(const std::string& path, const CommandOptions& options)
{
    return guarded([&] {
        const Scenario s = apply_overrides(load_scenario(path), options);
        log_notices(s);
        const RunResult r = run_scenario(s, options, true);
        for (const SimLog& log : r.logs) {
            for (const MonitorResult& m : log.monitors.results) {
                if (m.applicable && !m.passed) {
                    spdlog::info("{}: {} failed {} time(s), first at t={}, worst margin {:.3e}", log.label, m.name,
                                 m.failures, m.first_failure, m.worst_margin);
                }
            }
        }
        std::cout << r.summary.dump(2) << '\n';
        return r.exit_code;
    });
}

int cmd_verify(const std::string& path, const CommandOptions& options)
{
    return guarded([&] {
        const Scenario s = apply_overrides(load_scenario(path), options);
        log_notices(s);
        std::map<int, bool> done;
        json out = json::object();
        for (const ControllerBlock& c : s.controllers) {
            if (done[c.horizon]) {
                continue;
            }
            done[c.horizon] = true;
            PreparedProblem p = [&] {
                try {
                    return prepare_problem(s, c.horizon, options.verify_workers);
                } catch (const VerificationFailure& e) {
                    std::cout << json{{"horizon", c.horizon}, {"verdict", verdict_json(e.verdict())}}.dump(2) << '\n';
                    throw;
                }
            }();
            out[std::to_string(c.horizon)] = {{"k_gain", matrix_json(p.terminal.k_gain)},
                                              {"p_matrix", matrix_json(p.terminal.p_matrix)},
                                              {"alpha", p.terminal.alpha},
                                              {"verdict", verdict_json(p.verdict)},
                                              {"v_max_bound", p.v_max.bound},
                                              {"v_max_sampled", p.v_max.sampled_max},
                                              {"v_max_samples", p.v_max.samples}};
            spdlog::info("N={}: alpha = {:.6g}, margins (admissibility {:.3e}, invariance {:.3e}, decrease {:.3e}), "
                         "V_max bound {:.6g}",
                         c.horizon, p.terminal.alpha, p.verdict.admissibility_margin, p.verdict.invariance_margin,
                         p.verdict.decrease_margin, p.v_max.bound);
        }
        std::cout << out.dump(2) << '\n';
        return exit_code::kOk;
    });
}

int cmd_calibrate_kappa(const std::string& path, double target_kwh, const CommandOptions& options,
                        const std::string& output_path)
{
    return guarded([&] {
        Scenario s = apply_overrides(load_scenario(path), options);
        log_notices(s);
        const CalibrationResult r = calibrate_kappa(s, target_kwh);
        if (!r.bracketed) {
            spdlog::error("calibration failed: {}", r.message);
            return exit_code::kNotBracketing;
        }
        s.costs.econ.kappa_bar = r.kappa_bar;
        const fs::path out = output_path.empty() ? fs::path(s.output_dir) / "calibrated_scenario.json"
                                                 : fs::path(output_path);
        if (out.has_parent_path()) {
            fs::create_directories(out.parent_path());
        }
        std::ofstream(out) << to_json(s).dump(2) << '\n';
        std::cout << json{{"kappa_bar", r.kappa_bar},
                          {"energy_kwh", r.energy_kwh},
                          {"target_kwh", target_kwh},
                          {"evaluations", r.evaluations},
                          {"scenario", out.string()}}
                         .dump(2)
                  << '\n';
        return exit_code::kOk;
    });
}

int cmd_steady_state(const std::string& path, const CommandOptions& options)
{
    return guarded([&] {
        const Scenario s = apply_overrides(load_scenario(path), options);
        log_notices(s);
        const SystemModel model = build_system(s);
        const SteadyState st = solve_steady_state(model, s.costs.econ);
        std::cout << json{{"xs", to_std(st.xs)}, {"us", to_std(st.us)}, {"cost", st.cost}, {"residual", st.residual}}
                         .dump(2)
                  << '\n';
        return exit_code::kOk;
    });
}

} // namespace empc
