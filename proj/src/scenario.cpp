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
#include "empc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace empc {

namespace {

using nlohmann::json;

std::string child(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

class Reader {
public:
    explicit Reader(std::vector<std::string>& notices) : notices_(notices) {}

    void object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) const
    {
        if (!j.is_object()) {
            throw ScenarioError(path, "expected an object");
        }
        const std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& item : j.items()) {
            if (!ok.count(item.key())) {
                throw ScenarioError(child(path, item.key()), "unknown field");
            }
        }
    }

    double number(const json& j, const std::string& path) const
    {
        if (!j.is_number()) {
            throw ScenarioError(path, "expected a number");
        }
        const double v = j.get<double>();
        if (!std::isfinite(v)) {
            throw ScenarioError(path, "must be finite");
        }
        return v;
    }

    double number(const json& obj, const std::string& path, const char* key, double fallback,
                  bool announce = false) const
    {
        if (!obj.contains(key)) {
            if (announce) {
                notices_.push_back(fmt::format("{} not given, defaulting to {}", child(path, key), fallback));
            }
            return fallback;
        }
        return number(obj.at(key), child(path, key));
    }

    int integer(const json& obj, const std::string& path, const char* key, int fallback) const
    {
        if (!obj.contains(key)) {
            return fallback;
        }
        const json& j = obj.at(key);
        if (!j.is_number_integer()) {
            throw ScenarioError(child(path, key), "expected an integer");
        }
        return j.get<int>();
    }

    std::string string(const json& obj, const std::string& path, const char* key, const std::string& fallback) const
    {
        if (!obj.contains(key)) {
            return fallback;
        }
        const json& j = obj.at(key);
        if (!j.is_string()) {
            throw ScenarioError(child(path, key), "expected a string");
        }
        return j.get<std::string>();
    }

    Vector vector(const json& j, const std::string& path, Eigen::Index expected = -1) const
    {
        if (!j.is_array()) {
            throw ScenarioError(path, "expected an array of numbers");
        }
        if (expected >= 0 && static_cast<Eigen::Index>(j.size()) != expected) {
            throw ScenarioError(path, fmt::format("expected {} entries, found {}", expected, j.size()));
        }
        Vector v(static_cast<Eigen::Index>(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) {
            v(static_cast<Eigen::Index>(i)) = number(j[i], index(path, i));
        }
        return v;
    }

    // Bounds may be null for an infinite side.
    Vector bounds(const json& j, const std::string& path, double infinity) const
    {
        if (!j.is_array()) {
            throw ScenarioError(path, "expected an array");
        }
        Vector v(static_cast<Eigen::Index>(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) {
            v(static_cast<Eigen::Index>(i)) = j[i].is_null() ? infinity : number(j[i], index(path, i));
        }
        return v;
    }

    Matrix matrix(const json& j, const std::string& path) const
    {
        if (!j.is_array() || j.empty()) {
            throw ScenarioError(path, "expected a nonempty array of rows");
        }
        const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
        Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
        for (std::size_t i = 0; i < j.size(); ++i) {
            const Vector row = vector(j[i], index(path, i), static_cast<Eigen::Index>(cols));
            m.row(static_cast<Eigen::Index>(i)) = row.transpose();
        }
        return m;
    }

private:
    std::vector<std::string>& notices_;
};

json vec_json(const Vector& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        a.push_back(std::isfinite(v(i)) ? json(v(i)) : json(nullptr));
    }
    return a;
}

json mat_json(const Matrix& m)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        a.push_back(vec_json(m.row(i).transpose()));
    }
    return a;
}

const char* discretization_name(Discretization d)
{
    return d == Discretization::kForwardEuler ? "forward-euler" : "matrix-exponential";
}

std::string default_label(const ControllerBlock& c)
{
    return c.scheme == Scheme::kAlg2 ? fmt::format("alg2-m{}", c.m) : std::string(to_string(c.scheme));
}

void read_model(const Reader& rd, const json& j, const std::string& path, ModelBlock& m,
                std::vector<std::string>& notices)
{
    rd.object(j, path,
              {"source", "params", "discretization", "g_offset", "a_matrix", "g_coeff", "g_offset_vector",
               "d_vector", "state_box", "input_set", "asymptotic_set"});
    m.source = rd.string(j, path, "source", m.source);
    if (m.source != "rc" && m.source != "printed" && m.source != "explicit") {
        throw ScenarioError(child(path, "source"), "expected \"rc\", \"printed\" or \"explicit\"");
    }
    if (j.contains("params")) {
        const std::string pp = child(path, "params");
        const json& p = j.at("params");
        rd.object(p, pp,
                  {"c1", "c2", "cp", "r12", "r1o", "r2o", "ts1", "ts2", "to", "q1", "q2", "dt_seconds"});
        TwoZoneHvacParams& hv = m.params;
        hv.c1 = rd.number(p, pp, "c1", hv.c1);
        hv.c2 = rd.number(p, pp, "c2", hv.c2);
        hv.cp = rd.number(p, pp, "cp", hv.cp);
        hv.r12 = rd.number(p, pp, "r12", hv.r12);
        hv.r1o = rd.number(p, pp, "r1o", hv.r1o);
        hv.r2o = rd.number(p, pp, "r2o", hv.r2o);
        hv.ts1 = rd.number(p, pp, "ts1", hv.ts1);
        hv.ts2 = rd.number(p, pp, "ts2", hv.ts2);
        hv.to = rd.number(p, pp, "to", hv.to);
        hv.q1 = rd.number(p, pp, "q1", hv.q1);
        hv.q2 = rd.number(p, pp, "q2", hv.q2);
        hv.dt_seconds = rd.number(p, pp, "dt_seconds", hv.dt_seconds);
        try {
            hv.validate();
        } catch (const UsageError& e) {
            throw ScenarioError(pp, e.what());
        }
    }
    const std::string disc = rd.string(j, path, "discretization", discretization_name(m.discretization));
    if (disc == "forward-euler") {
        m.discretization = Discretization::kForwardEuler;
    } else if (disc == "matrix-exponential") {
        m.discretization = Discretization::kMatrixExponential;
    } else {
        throw ScenarioError(child(path, "discretization"), "expected \"forward-euler\" or \"matrix-exponential\"");
    }
    if (j.contains("g_offset")) {
        m.g_offset = rd.number(j.at("g_offset"), child(path, "g_offset"));
    }
    if (m.source == "explicit") {
        for (const char* key : {"a_matrix", "g_coeff", "g_offset_vector", "d_vector"}) {
            if (!j.contains(key)) {
                throw ScenarioError(child(path, key), "required when source is \"explicit\"");
            }
        }
        AffineBilinearModel e;
        e.a_matrix = rd.matrix(j.at("a_matrix"), child(path, "a_matrix"));
        const Eigen::Index n = e.a_matrix.rows();
        e.g_coeff = rd.vector(j.at("g_coeff"), child(path, "g_coeff"), n);
        e.g_offset = rd.vector(j.at("g_offset_vector"), child(path, "g_offset_vector"), n);
        e.d_vector = rd.vector(j.at("d_vector"), child(path, "d_vector"), n);
        try {
            e.validate();
        } catch (const UsageError& err) {
            throw ScenarioError(path, err.what());
        }
        m.explicit_model = e;
    }
    if (j.contains("state_box")) {
        const std::string bp = child(path, "state_box");
        const json& b = j.at("state_box");
        rd.object(b, bp, {"lower", "upper"});
        if (!b.contains("lower") || !b.contains("upper")) {
            throw ScenarioError(bp, "requires lower and upper");
        }
        m.state_box.lower = rd.vector(b.at("lower"), child(bp, "lower"));
        m.state_box.upper = rd.vector(b.at("upper"), child(bp, "upper"), m.state_box.lower.size());
    }
    if (j.contains("input_set")) {
        const std::string ip = child(path, "input_set");
        const json& s = j.at("input_set");
        rd.object(s, ip, {"max_total_flow", "a", "b", "lower", "upper"});
        if (s.contains("max_total_flow")) {
            m.input_set = hvac_input_set(rd.number(s.at("max_total_flow"), child(ip, "max_total_flow")));
        } else {
            for (const char* key : {"a", "b", "lower", "upper"}) {
                if (!s.contains(key)) {
                    throw ScenarioError(child(ip, key), "required unless max_total_flow is given");
                }
            }
            InputSet u;
            u.lower = rd.bounds(s.at("lower"), child(ip, "lower"), -std::numeric_limits<double>::infinity());
            u.upper = rd.bounds(s.at("upper"), child(ip, "upper"), std::numeric_limits<double>::infinity());
            if (s.at("a").is_array() && s.at("a").empty()) {
                u.a.resize(0, u.lower.size());
            } else {
                u.a = rd.matrix(s.at("a"), child(ip, "a"));
            }
            u.b = rd.vector(s.at("b"), child(ip, "b"), u.a.rows());
            m.input_set = u;
        }
    }
    if (j.contains("asymptotic_set")) {
        const std::string ap = child(path, "asymptotic_set");
        const json& a = j.at("asymptotic_set");
        if (!a.is_array() || a.empty()) {
            throw ScenarioError(ap, "expected a nonempty array of states");
        }
        m.asymptotic_set.clear();
        for (std::size_t i = 0; i < a.size(); ++i) {
            m.asymptotic_set.push_back(rd.vector(a[i], index(ap, i)));
        }
    }
    if (m.g_offset && m.source == "rc" &&
        (std::abs(*m.g_offset - m.params.ts1) > 0.0 || std::abs(*m.g_offset - m.params.ts2) > 0.0)) {
        notices.push_back(fmt::format(
            "warning: {} = {} differs from the supply temperatures ({}, {}); the input term uses {}",
            child(path, "g_offset"), *m.g_offset, m.params.ts1, m.params.ts2, *m.g_offset));
    }
}

void read_costs(const Reader& rd, const json& j, const std::string& path, CostsBlock& c)
{
    rd.object(j, path,
              {"q", "r", "kappa_bar", "eta_c", "eta_h", "th", "ts", "cp", "delta_coeff", "gamma_coeff"});
    if (j.contains("q")) {
        c.q = rd.matrix(j.at("q"), child(path, "q"));
    }
    if (j.contains("r")) {
        c.r = rd.matrix(j.at("r"), child(path, "r"));
    }
    c.econ.kappa_bar = rd.number(j, path, "kappa_bar", c.econ.kappa_bar);
    c.econ.eta_c = rd.number(j, path, "eta_c", c.econ.eta_c);
    c.econ.eta_h = rd.number(j, path, "eta_h", c.econ.eta_h);
    c.econ.cp = rd.number(j, path, "cp", c.econ.cp);
    if (j.contains("th")) {
        c.econ.th = rd.vector(j.at("th"), child(path, "th"));
    }
    if (j.contains("ts")) {
        c.econ.ts = rd.vector(j.at("ts"), child(path, "ts"));
    }
    c.penalties.delta_coeff = rd.number(j, path, "delta_coeff", c.penalties.delta_coeff);
    c.penalties.gamma_coeff = rd.number(j, path, "gamma_coeff", c.penalties.gamma_coeff);
    try {
        TrackingWeights{c.q, c.r, Matrix()}.validate();
    } catch (const UsageError& e) {
        throw ScenarioError(path, e.what());
    }
    try {
        c.econ.validate();
    } catch (const UsageError& e) {
        throw ScenarioError(path, e.what());
    }
    if (!(c.penalties.delta_coeff > 0.0)) {
        throw ScenarioError(child(path, "delta_coeff"), "must be strictly positive (delta is positive definite)");
    }
    if (!(c.penalties.gamma_coeff > 0.0)) {
        throw ScenarioError(child(path, "gamma_coeff"), "must be strictly positive (gamma is positive definite)");
    }
}

void read_terminal(const Reader& rd, const json& j, const std::string& path, TerminalBlock& t)
{
    rd.object(j, path, {"k_gain", "epsilon", "alpha_shrink", "verify_samples", "v_max_samples", "seed"});
    if (j.contains("k_gain")) {
        const json& k = j.at("k_gain");
        if (k.is_string()) {
            if (k.get<std::string>() != "lqr") {
                throw ScenarioError(child(path, "k_gain"), "expected a matrix or \"lqr\"");
            }
            t.k_gain.reset();
        } else {
            t.k_gain = rd.matrix(k, child(path, "k_gain"));
        }
    }
    t.epsilon = rd.number(j, path, "epsilon", t.epsilon);
    t.alpha_shrink = rd.number(j, path, "alpha_shrink", t.alpha_shrink);
    t.verify_samples = rd.integer(j, path, "verify_samples", t.verify_samples);
    t.v_max_samples = rd.integer(j, path, "v_max_samples", t.v_max_samples);
    t.seed = static_cast<std::uint64_t>(rd.integer(j, path, "seed", static_cast<int>(t.seed)));
    if (!(t.epsilon >= 0.0)) {
        throw ScenarioError(child(path, "epsilon"), "must be nonnegative");
    }
    if (!(t.alpha_shrink > 0.0 && t.alpha_shrink <= 1.0)) {
        throw ScenarioError(child(path, "alpha_shrink"), "must lie in (0, 1]");
    }
    if (t.verify_samples < 1) {
        throw ScenarioError(child(path, "verify_samples"), "must be positive");
    }
    if (t.v_max_samples < 0) {
        throw ScenarioError(child(path, "v_max_samples"), "must be nonnegative");
    }
}

ControllerBlock read_controller(const Reader& rd, const json& j, const std::string& path)
{
    rd.object(j, path, {"label", "scheme", "horizon", "m", "beta", "tau", "v_max"});
    ControllerBlock c;
    if (!j.contains("scheme")) {
        throw ScenarioError(child(path, "scheme"), "required");
    }
    try {
        c.scheme = scheme_from_string(rd.string(j, path, "scheme", ""));
    } catch (const UsageError& e) {
        throw ScenarioError(child(path, "scheme"), e.what());
    }
    c.horizon = rd.integer(j, path, "horizon", c.horizon);
    c.m = rd.integer(j, path, "m", c.scheme == Scheme::kAlg2 ? c.m : 1);
    c.beta = rd.number(j, path, "beta", c.beta, c.scheme != Scheme::kTracking);
    c.tau = rd.number(j, path, "tau", c.tau);
    if (j.contains("v_max")) {
        c.v_max = rd.number(j.at("v_max"), child(path, "v_max"));
    }
    c.label = rd.string(j, path, "label", default_label(c));
    if (c.horizon < 1) {
        throw ScenarioError(child(path, "horizon"), "must be >= 1");
    }
    if (!(c.beta > 0.0 && c.beta <= 1.0)) {
        throw ScenarioError(child(path, "beta"), "must lie in (0, 1]");
    }
    if (!(c.tau >= 0.0 && c.tau < 1.0)) {
        throw ScenarioError(child(path, "tau"), "must lie in [0, 1)");
    }
    if (c.scheme == Scheme::kAlg2 && c.m < 2) {
        throw ScenarioError(child(path, "m"), "alg2 requires m >= 2");
    }
    if (c.v_max && !(*c.v_max > 0.0)) {
        throw ScenarioError(child(path, "v_max"), "must be positive");
    }
    return c;
}

void read_solver(const Reader& rd, const json& j, const std::string& path, SolverBlock& s)
{
    rd.object(j, path, {"feas_tol", "opt_tol", "max_iter", "differentiation", "warm_start_tol"});
    s.nlp.feas_tol = rd.number(j, path, "feas_tol", s.nlp.feas_tol);
    s.nlp.opt_tol = rd.number(j, path, "opt_tol", s.nlp.opt_tol);
    s.nlp.max_iter = rd.integer(j, path, "max_iter", s.nlp.max_iter);
    s.warm_start_tol = rd.number(j, path, "warm_start_tol", s.warm_start_tol);
    const std::string diff = rd.string(j, path, "differentiation", "analytic");
    if (diff == "analytic") {
        s.differentiation = Differentiation::kAnalytic;
    } else if (diff == "finite-difference") {
        s.differentiation = Differentiation::kFiniteDifference;
    } else {
        throw ScenarioError(child(path, "differentiation"), "expected \"analytic\" or \"finite-difference\"");
    }
    if (!(s.nlp.feas_tol > 0.0)) {
        throw ScenarioError(child(path, "feas_tol"), "must be positive");
    }
    if (!(s.nlp.opt_tol > 0.0)) {
        throw ScenarioError(child(path, "opt_tol"), "must be positive");
    }
    if (s.nlp.max_iter < 1) {
        throw ScenarioError(child(path, "max_iter"), "must be >= 1");
    }
    if (!(s.warm_start_tol >= s.nlp.feas_tol)) {
        throw ScenarioError(child(path, "warm_start_tol"), "must be >= feas_tol");
    }
}

void read_sim(const Reader& rd, const json& j, const std::string& path, SimBlock& s)
{
    rd.object(j, path, {"x0", "steps", "seed"});
    if (j.contains("x0")) {
        s.x0 = rd.vector(j.at("x0"), child(path, "x0"));
    }
    s.steps = rd.integer(j, path, "steps", s.steps);
    s.seed = static_cast<std::uint64_t>(rd.integer(j, path, "seed", static_cast<int>(s.seed)));
    if (s.steps < 1) {
        throw ScenarioError(child(path, "steps"), "must be >= 1");
    }
}

void cross_validate(const Scenario& s)
{
    const Eigen::Index n_x = s.model.source == "explicit" ? s.model.explicit_model->a_matrix.rows() : 2;
    const Eigen::Index n_u = n_x;
    if (s.model.state_box.lower.size() != n_x) {
        throw ScenarioError("model.state_box", fmt::format("expected {} coordinates", n_x));
    }
    if ((s.model.state_box.lower.array() >= s.model.state_box.upper.array()).any()) {
        throw ScenarioError("model.state_box", "lower must be strictly below upper");
    }
    if (s.model.input_set.lower.size() != n_u || s.model.input_set.upper.size() != n_u ||
        s.model.input_set.a.cols() != n_u) {
        throw ScenarioError("model.input_set", fmt::format("expected {} inputs", n_u));
    }
    for (std::size_t i = 0; i < s.model.asymptotic_set.size(); ++i) {
        const Vector& p = s.model.asymptotic_set[i];
        const std::string path = index("model.asymptotic_set", i);
        if (p.size() != n_x) {
            throw ScenarioError(path, fmt::format("expected {} coordinates", n_x));
        }
        if ((p.array() < s.model.state_box.lower.array()).any() ||
            (p.array() > s.model.state_box.upper.array()).any()) {
            throw ScenarioError(path, "lies outside the state box");
        }
    }
    if (s.costs.q.rows() != n_x) {
        throw ScenarioError("costs.q", fmt::format("expected {}x{}", n_x, n_x));
    }
    if (s.costs.r.rows() != n_u) {
        throw ScenarioError("costs.r", fmt::format("expected {}x{}", n_u, n_u));
    }
    if (s.costs.econ.th.size() != n_x || s.costs.econ.ts.size() != n_x) {
        throw ScenarioError("costs", "th and ts need one entry per zone");
    }
    if (s.terminal.k_gain && (s.terminal.k_gain->rows() != n_u || s.terminal.k_gain->cols() != n_x)) {
        throw ScenarioError("terminal.k_gain", fmt::format("expected {}x{}", n_u, n_x));
    }
    if (s.sim.x0.size() != n_x) {
        throw ScenarioError("sim.x0", fmt::format("expected {} coordinates", n_x));
    }
    if ((s.sim.x0.array() < s.model.state_box.lower.array()).any() ||
        (s.sim.x0.array() > s.model.state_box.upper.array()).any()) {
        throw ScenarioError("sim.x0", "lies outside the state box");
    }
    std::set<std::string> labels;
    for (std::size_t i = 0; i < s.controllers.size(); ++i) {
        if (!labels.insert(s.controllers[i].label).second) {
            throw ScenarioError(index("controllers", i) + ".label",
                                fmt::format("duplicate label '{}'", s.controllers[i].label));
        }
    }
}

} // namespace

Scenario default_scenario()
{
    Scenario s;
    ControllerBlock c;
    c.scheme = Scheme::kTracking;
    c.m = 1;
    c.label = "tracking";
    s.controllers.push_back(c);
    c.scheme = Scheme::kAlg1;
    c.label = "alg1";
    s.controllers.push_back(c);
    c.scheme = Scheme::kAlg2;
    c.m = 4;
    c.label = "alg2-m4";
    s.controllers.push_back(c);
    c.m = 8;
    c.label = "alg2-m8";
    s.controllers.push_back(c);
    return s;
}

Scenario scenario_from_json(const json& j)
{
    Scenario s = default_scenario();
    Reader rd(s.notices);
    rd.object(j, "", {"model", "costs", "terminal", "controllers", "solver", "sim", "output_dir"});
    if (j.contains("model")) {
        read_model(rd, j.at("model"), "model", s.model, s.notices);
    }
    if (j.contains("costs")) {
        read_costs(rd, j.at("costs"), "costs", s.costs);
    }
    if (j.contains("terminal")) {
        read_terminal(rd, j.at("terminal"), "terminal", s.terminal);
    }
    if (j.contains("controllers")) {
        const json& cs = j.at("controllers");
        if (!cs.is_array() || cs.empty()) {
            throw ScenarioError("controllers", "expected a nonempty array");
        }
        s.controllers.clear();
        for (std::size_t i = 0; i < cs.size(); ++i) {
            s.controllers.push_back(read_controller(rd, cs[i], index("controllers", i)));
        }
    }
    if (j.contains("solver")) {
        read_solver(rd, j.at("solver"), "solver", s.solver);
    }
    if (j.contains("sim")) {
        read_sim(rd, j.at("sim"), "sim", s.sim);
    }
    s.output_dir = rd.string(j, "", "output_dir", s.output_dir);
    cross_validate(s);
    return s;
}

json to_json(const Scenario& s)
{
    json j;
    const TwoZoneHvacParams& p = s.model.params;
    json model = {{"source", s.model.source},
                  {"params",
                   {{"c1", p.c1},
                    {"c2", p.c2},
                    {"cp", p.cp},
                    {"r12", p.r12},
                    {"r1o", p.r1o},
                    {"r2o", p.r2o},
                    {"ts1", p.ts1},
                    {"ts2", p.ts2},
                    {"to", p.to},
                    {"q1", p.q1},
                    {"q2", p.q2},
                    {"dt_seconds", p.dt_seconds}}},
                  {"discretization", discretization_name(s.model.discretization)},
                  {"state_box", {{"lower", vec_json(s.model.state_box.lower)}, {"upper", vec_json(s.model.state_box.upper)}}},
                  {"input_set",
                   {{"a", s.model.input_set.a.rows() ? mat_json(s.model.input_set.a) : json::array()},
                    {"b", vec_json(s.model.input_set.b)},
                    {"lower", vec_json(s.model.input_set.lower)},
                    {"upper", vec_json(s.model.input_set.upper)}}}};
    if (s.model.g_offset) {
        model["g_offset"] = *s.model.g_offset;
    }
    if (s.model.explicit_model) {
        model["a_matrix"] = mat_json(s.model.explicit_model->a_matrix);
        model["g_coeff"] = vec_json(s.model.explicit_model->g_coeff);
        model["g_offset_vector"] = vec_json(s.model.explicit_model->g_offset);
        model["d_vector"] = vec_json(s.model.explicit_model->d_vector);
    }
    json asym = json::array();
    for (const Vector& v : s.model.asymptotic_set) {
        asym.push_back(vec_json(v));
    }
    model["asymptotic_set"] = asym;
    j["model"] = model;

    j["costs"] = {{"q", mat_json(s.costs.q)},
                  {"r", mat_json(s.costs.r)},
                  {"kappa_bar", s.costs.econ.kappa_bar},
                  {"eta_c", s.costs.econ.eta_c},
                  {"eta_h", s.costs.econ.eta_h},
                  {"th", vec_json(s.costs.econ.th)},
                  {"ts", vec_json(s.costs.econ.ts)},
                  {"cp", s.costs.econ.cp},
                  {"delta_coeff", s.costs.penalties.delta_coeff},
                  {"gamma_coeff", s.costs.penalties.gamma_coeff}};

    j["terminal"] = {{"k_gain", s.terminal.k_gain ? mat_json(*s.terminal.k_gain) : json("lqr")},
                     {"epsilon", s.terminal.epsilon},
                     {"alpha_shrink", s.terminal.alpha_shrink},
                     {"verify_samples", s.terminal.verify_samples},
                     {"v_max_samples", s.terminal.v_max_samples},
                     {"seed", s.terminal.seed}};

    json cs = json::array();
    for (const ControllerBlock& c : s.controllers) {
        json cj = {{"label", c.label},
                   {"scheme", to_string(c.scheme)},
                   {"horizon", c.horizon},
                   {"m", c.m},
                   {"beta", c.beta},
                   {"tau", c.tau}};
        if (c.v_max) {
            cj["v_max"] = *c.v_max;
        }
        cs.push_back(cj);
    }
    j["controllers"] = cs;
    j["solver"] = {{"feas_tol", s.solver.nlp.feas_tol},
                   {"opt_tol", s.solver.nlp.opt_tol},
                   {"max_iter", s.solver.nlp.max_iter},
                   {"differentiation",
                    s.solver.differentiation == Differentiation::kAnalytic ? "analytic" : "finite-difference"},
                   {"warm_start_tol", s.solver.warm_start_tol}};
    j["sim"] = {{"x0", vec_json(s.sim.x0)}, {"steps", s.sim.steps}, {"seed", s.sim.seed}};
    j["output_dir"] = s.output_dir;
    return j;
}

Scenario parse_scenario(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // Translate the byte offset into line:column.
        std::size_t line = 1;
        std::size_t col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ScenarioError("", fmt::format("JSON syntax error at line {}, column {}: {}", line, col, e.what()));
    }
    return scenario_from_json(j);
}

Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ScenarioError("", fmt::format("cannot open scenario file '{}'", path));
    }
    std::ostringstream os;
    os << in.rdbuf();
    return parse_scenario(os.str());
}

AffineBilinearModel build_dynamics(const Scenario& s)
{
    if (s.model.source == "explicit") {
        return *s.model.explicit_model;
    }
    if (s.model.source == "printed") {
        return printed_two_zone_model(s.model.g_offset.value_or(15.0));
    }
    AffineBilinearModel m = discretize_rc(s.model.params, s.model.discretization);
    if (s.model.g_offset) {
        m.g_offset.setConstant(*s.model.g_offset);
    }
    return m;
}

SystemModel build_system(const Scenario& s)
{
    return make_system(build_dynamics(s), s.model.state_box, s.model.input_set, s.model.asymptotic_set,
                       s.model.params.dt_seconds);
}

CostSuite build_costs(const Scenario& s, const Vector& xs, const Vector& us)
{
    CostSuite c;
    c.econ = s.costs.econ;
    c.weights = TrackingWeights{s.costs.q, s.costs.r, Matrix()};
    c.penalties = s.costs.penalties;
    c.xs = xs;
    c.us = us;
    return c;
}

ControllerConfig build_controller_config(const Scenario& s, const ControllerBlock& b)
{
    ControllerConfig c;
    c.scheme = b.scheme;
    c.horizon = b.horizon;
    c.m = b.scheme == Scheme::kAlg2 ? b.m : 1;
    c.beta = b.beta;
    c.tau = b.tau;
    c.v_max = b.v_max;
    c.nlp = s.solver.nlp;
    c.warm_start_tol = s.solver.warm_start_tol;
    return c;
}

} // namespace empc
