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
#include "empc/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "empc/nlp.hpp"
#include "empc/sampling.hpp"

namespace empc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_vector(const Vector& v)
{
    std::ostringstream os;
    os << "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        os << (i ? ", " : "") << v(i);
    }
    os << ")";
    return os.str();
}

struct Candidate {
    Vector us;
    double residual = kInf;
    std::string failure;
};

Candidate newton_steady_input(const SystemModel& model, const Vector& xs, const SteadyStateOptions& options)
{
    Candidate c;
    Vector u = Vector::Zero(model.n_u()).cwiseMax(model.input_set().lower).cwiseMin(model.input_set().upper);
    Matrix fx;
    Matrix fu;
    for (int it = 0; it < options.max_newton_iterations; ++it) {
        const Vector r = model.step(xs, u) - xs;
        c.residual = r.norm();
        if (c.residual <= options.tolerance * 1e-3) {
            break;
        }
        model.jacobians(xs, u, fx, fu);
        const Eigen::FullPivLU<Matrix> lu(fu);
        if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-14) {
            c.failure = fmt::format("g(x_s) is singular at x_s = {}", format_vector(xs));
            return c;
        }
        u -= lu.solve(r);
    }
    c.residual = (model.step(xs, u) - xs).norm();
    c.us = u;
    return c;
}

Candidate nlp_steady_input(const SystemModel& model, const EconomicCostParams& econ, const Vector& xs,
                           const SteadyStateOptions& options)
{
    const InputSet& set = model.input_set();
    NlpSpec spec;
    spec.n_vars = model.n_u();
    spec.objective = [&](const Vector& u, Vector* grad) {
        const StageValue v = econ_stage_cost_with_gradient(econ, xs, u);
        if (grad) {
            *grad = v.du;
        }
        return v.value;
    };
    spec.n_eq = model.n_x();
    spec.eq_constraints = [&](const Vector& u, Matrix* jac) {
        if (jac) {
            Matrix fx;
            model.jacobians(xs, u, fx, *jac);
        }
        return Vector(model.step(xs, u) - xs);
    };
    spec.n_ineq = static_cast<int>(set.a.rows());
    spec.ineq_constraints = [&](const Vector& u, Matrix* jac) {
        if (jac) {
            *jac = set.a;
        }
        return Vector(set.a * u - set.b);
    };
    spec.lower = set.lower;
    spec.upper = set.upper;
    spec.initial_point = Vector::Zero(model.n_u()).cwiseMax(set.lower).cwiseMin(set.upper);
    NlpOptions opts;
    opts.feas_tol = options.tolerance;
    const NlpResult res = solve(spec, opts);
    Candidate c;
    c.us = res.x;
    c.residual = (model.step(xs, res.x) - xs).norm();
    if (res.status == NlpStatus::kInfeasible) {
        c.failure = "no admissible input satisfies the equilibrium equations";
    }
    return c;
}

} // namespace

SteadyState solve_steady_state(const SystemModel& model, const EconomicCostParams& econ,
                               const SteadyStateOptions& options)
{
    if (model.asymptotic_set().empty()) {
        throw UsageError("solve_steady_state: asymptotic set is empty");
    }
    std::optional<SteadyState> best;
    double best_residual = kInf;
    std::string last_failure;
    for (const Vector& xs : model.asymptotic_set()) {
        const Candidate c = model.n_u() == model.n_x() ? newton_steady_input(model, xs, options)
                                                       : nlp_steady_input(model, econ, xs, options);
        if (!c.failure.empty()) {
            last_failure = c.failure;
            best_residual = std::min(best_residual, c.residual);
            continue;
        }
        if (c.residual > options.tolerance) {
            best_residual = std::min(best_residual, c.residual);
            last_failure = fmt::format("equilibrium residual {:.3e} exceeds tolerance at x_s = {}", c.residual,
                                       format_vector(xs));
            continue;
        }
        if (!model.input_in_set(c.us, options.tolerance)) {
            // Report how far the nearest admissible input is from an equilibrium.
            const double projected = (model.step(xs, project_to_input_set(model, c.us)) - xs).norm();
            best_residual = std::min(best_residual, projected);
            last_failure = fmt::format("steady input {} is not admissible (slack {:.3e}); nearest admissible input "
                                       "leaves residual {:.3e}",
                                       format_vector(c.us), model.input_slack(c.us), projected);
            continue;
        }
        const double cost = econ_stage_cost(econ, xs, c.us);
        if (!best || cost < best->cost) {
            best = SteadyState{xs, c.us, cost, c.residual};
        }
    }
    if (!best) {
        throw SteadyStateError("solve_steady_state: " + last_failure, best_residual);
    }
    return *best;
}

void linearize(const SystemModel& model, const Vector& xs, const Vector& us, Matrix& a, Matrix& b)
{
    model.jacobians(xs, us, a, b);
}

Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r)
{
    Matrix p = q;
    for (int it = 0; it < 10000; ++it) {
        const Matrix btp = b.transpose() * p;
        const Matrix gain = (r + btp * b).ldlt().solve(btp * a);
        const Matrix next = q + a.transpose() * p * (a - b * gain);
        const double change = (next - p).cwiseAbs().maxCoeff();
        p = 0.5 * (next + next.transpose());
        if (change <= 1e-12 * (1.0 + p.cwiseAbs().maxCoeff())) {
            break;
        }
    }
    const Matrix btp = b.transpose() * p;
    return -(r + btp * b).ldlt().solve(btp * a);
}

Matrix solve_discrete_lyapunov(const Matrix& a, const Matrix& w)
{
    const Eigen::Index n = a.rows();
    // vec(A' P A) = (A' kron A') vec(P) for column-major vec.
    const Matrix at = a.transpose();
    Matrix kron(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            kron.block(i * n, j * n, n, n) = at(i, j) * at;
        }
    }
    const Matrix lhs = Matrix::Identity(n * n, n * n) - kron;
    const Vector rhs = Eigen::Map<const Vector>(w.data(), n * n);
    const Vector vec_p = lhs.fullPivLu().solve(rhs);
    Matrix p = Eigen::Map<const Matrix>(vec_p.data(), n, n);
    return 0.5 * (p + p.transpose());
}

double spectral_radius(const Matrix& a)
{
    const Eigen::EigenSolver<Matrix> es(a, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

CostSuite with_terminal(CostSuite costs, const TerminalIngredients& ingredients)
{
    costs.weights.p = ingredients.p_matrix;
    return costs;
}

TerminalMargins terminal_margins(const SystemModel& model, const CostSuite& costs,
                                 const TerminalIngredients& ingredients, int horizon, const Vector& x)
{
    const CostSuite suite = with_terminal(costs, ingredients);
    const Vector u = ingredients.kappa(x);
    const Vector next = model.step(x, u);
    const StateBox& box = model.state_box();
    TerminalMargins m;
    m.admissibility = std::min({model.input_slack(u), (x - box.lower).minCoeff(), (box.upper - x).minCoeff()});
    m.invariance = ingredients.alpha - ingredients.level(next);
    const double lhs = ingredients.level(next) - ingredients.level(x);
    const double rhs = -suite.tracking_stage(x, u).value - (horizon - 1) * suite.delta(x, u).value -
                       suite.gamma(x).value;
    m.decrease = rhs - lhs;
    return m;
}

namespace {

// Worst margins over a shell family at one level; used by the alpha bisection.
bool level_passes(const SystemModel& model, const CostSuite& costs, TerminalIngredients& trial, int horizon,
                  const std::vector<Vector>& directions)
{
    static constexpr double kShells[] = {0.25, 0.5, 0.75, 0.9, 1.0};
    for (const Vector& z : directions) {
        for (double shell : kShells) {
            const Vector x = ellipsoid_point(trial, z, shell);
            const TerminalMargins m = terminal_margins(model, costs, trial, horizon, x);
            if (m.admissibility < 0.0 || m.invariance < 0.0 || m.decrease < 0.0) {
                return false;
            }
        }
    }
    return true;
}

} // namespace

TerminalIngredients synthesize_terminal(const SystemModel& model, const CostSuite& costs, int horizon,
                                        const TerminalOptions& options)
{
    if (horizon < 1) {
        throw UsageError("synthesize_terminal: horizon must be >= 1");
    }
    costs.weights.validate();
    const int n_x = model.n_x();
    Matrix a;
    Matrix b;
    linearize(model, costs.xs, costs.us, a, b);

    TerminalIngredients out;
    out.xs = costs.xs;
    out.us = costs.us;
    out.k_gain = options.k_gain ? *options.k_gain : lqr_gain(a, b, costs.weights.q, costs.weights.r);
    if (out.k_gain.rows() != model.n_u() || out.k_gain.cols() != n_x) {
        throw UsageError("synthesize_terminal: K must be n_u x n_x");
    }
    const Matrix a_cl = a + b * out.k_gain;
    const double rho = spectral_radius(a_cl);
    if (rho >= 1.0) {
        const Eigen::EigenSolver<Matrix> es(a_cl, false);
        std::ostringstream os;
        os << es.eigenvalues().transpose();
        throw SynthesisError(
            fmt::format("synthesize_terminal: closed-loop linearization is not Schur stable (spectral radius "
                        "{:.6f}, eigenvalues {})",
                        rho, os.str()));
    }

    const Matrix& k = out.k_gain;
    const Matrix eye = Matrix::Identity(n_x, n_x);
    const Matrix w = (1.0 + options.epsilon) *
                     (costs.weights.q + k.transpose() * costs.weights.r * k +
                      (horizon - 1) * costs.penalties.delta_coeff * (eye + k.transpose() * k) +
                      costs.penalties.gamma_coeff * eye);
    out.p_matrix = solve_discrete_lyapunov(a_cl, w);
    if (Eigen::LLT<Matrix>(out.p_matrix).info() != Eigen::Success) {
        throw SynthesisError("synthesize_terminal: terminal weight is not positive definite");
    }

    std::mt19937_64 rng(options.seed);
    std::vector<Vector> directions;
    if (n_x == 2) {
        for (int i = 0; i < options.boundary_samples; ++i) {
            const double th = 2.0 * M_PI * (i + 0.5) / options.boundary_samples;
            directions.emplace_back(Eigen::Vector2d(std::cos(th), std::sin(th)));
        }
    } else {
        for (int i = 0; i < options.boundary_samples; ++i) {
            directions.push_back(random_unit(n_x, rng));
        }
    }

    TerminalIngredients trial = out;
    auto passes = [&](double alpha) {
        trial.alpha = alpha;
        return level_passes(model, costs, trial, horizon, directions);
    };

    double lo = 0.0;
    double hi = 1.0;
    if (passes(hi)) {
        lo = hi;
        while (hi < options.alpha_cap) {
            hi = std::min(2.0 * hi, options.alpha_cap);
            if (!passes(hi)) {
                break;
            }
            lo = hi;
        }
    }
    if (lo < options.alpha_cap) {
        for (int it = 0; it < 80 && hi - lo > 1e-12 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (passes(mid) ? lo : hi) = mid;
        }
    }
    if (!(lo > 0.0)) {
        // Report the worst point at a tiny level as the certificate.
        trial.alpha = 1e-12;
        double worst = kInf;
        Vector worst_x = out.xs;
        for (const Vector& z : directions) {
            const Vector x = ellipsoid_point(trial, z);
            const TerminalMargins m = terminal_margins(model, costs, trial, horizon, x);
            const double v = std::min({m.admissibility, m.invariance, m.decrease});
            if (v < worst) {
                worst = v;
                worst_x = x;
            }
        }
        throw SynthesisError(fmt::format(
            "synthesize_terminal: no positive terminal level passes verification; worst margin {:.3e} at {}",
            worst, format_vector(worst_x)));
    }
    out.alpha = options.alpha_shrink * lo;
    spdlog::debug("terminal synthesis: spectral radius {:.4f}, alpha {:.6g}", rho, out.alpha);
    return out;
}

TerminalVerdict verify_terminal(const SystemModel& model, const CostSuite& costs,
                                const TerminalIngredients& ingredients, int horizon, int n_samples,
                                std::uint64_t seed, int workers, double tolerance)
{
    if (n_samples < 1) {
        throw UsageError("verify_terminal: n_samples must be positive");
    }
    std::mt19937_64 rng(seed);
    std::vector<Vector> samples;
    samples.reserve(static_cast<std::size_t>(n_samples));
    const int on_boundary = n_samples / 2;
    for (int i = 0; i < on_boundary; ++i) {
        samples.push_back(ellipsoid_point(ingredients, random_unit(model.n_x(), rng)));
    }
    for (int i = on_boundary; i < n_samples; ++i) {
        samples.push_back(ellipsoid_interior(ingredients, rng));
    }

    struct Partial {
        TerminalMargins worst{kInf, kInf, kInf};
        Vector at_admissibility;
        Vector at_invariance;
        Vector at_decrease;
    };
    auto scan = [&](std::size_t begin, std::size_t end) {
        Partial p;
        for (std::size_t i = begin; i < end; ++i) {
            const TerminalMargins m = terminal_margins(model, costs, ingredients, horizon, samples[i]);
            if (m.admissibility < p.worst.admissibility) {
                p.worst.admissibility = m.admissibility;
                p.at_admissibility = samples[i];
            }
            if (m.invariance < p.worst.invariance) {
                p.worst.invariance = m.invariance;
                p.at_invariance = samples[i];
            }
            if (m.decrease < p.worst.decrease) {
                p.worst.decrease = m.decrease;
                p.at_decrease = samples[i];
            }
        }
        return p;
    };

    if (workers <= 0) {
        workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    workers = std::min(workers, n_samples);
    std::vector<std::future<Partial>> futures;
    const std::size_t chunk = (samples.size() + static_cast<std::size_t>(workers) - 1) / static_cast<std::size_t>(workers);
    for (std::size_t begin = 0; begin < samples.size(); begin += chunk) {
        const std::size_t end = std::min(samples.size(), begin + chunk);
        futures.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, scan, begin, end));
    }
    Partial total;
    // Chunks are merged in order so ties resolve identically for any worker count.
    for (auto& f : futures) {
        const Partial p = f.get();
        if (p.worst.admissibility < total.worst.admissibility) {
            total.worst.admissibility = p.worst.admissibility;
            total.at_admissibility = p.at_admissibility;
        }
        if (p.worst.invariance < total.worst.invariance) {
            total.worst.invariance = p.worst.invariance;
            total.at_invariance = p.at_invariance;
        }
        if (p.worst.decrease < total.worst.decrease) {
            total.worst.decrease = p.worst.decrease;
            total.at_decrease = p.at_decrease;
        }
    }

    TerminalVerdict v;
    v.samples = n_samples;
    v.admissibility_margin = total.worst.admissibility;
    v.invariance_margin = total.worst.invariance;
    v.decrease_margin = total.worst.decrease;
    v.passed = true;
    if (v.admissibility_margin < -tolerance) {
        v.passed = false;
        v.failed_check = "admissibility";
        v.worst_point = total.at_admissibility;
    } else if (v.invariance_margin < -tolerance) {
        v.passed = false;
        v.failed_check = "invariance";
        v.worst_point = total.at_invariance;
    } else if (v.decrease_margin < -tolerance) {
        v.passed = false;
        v.failed_check = "decrease";
        v.worst_point = total.at_decrease;
    } else {
        v.worst_point = total.at_decrease;
    }
    return v;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(row);
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, const char* name)
{
    if (!j.is_array() || j.empty() || !j.front().is_array()) {
        throw UsageError(fmt::format("{}: expected a nonempty array of rows", name));
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols) {
            throw UsageError(fmt::format("{}: ragged rows", name));
        }
        for (Eigen::Index k = 0; k < cols; ++k) {
            m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
        }
    }
    return m;
}

Vector vector_from_json(const nlohmann::json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

} // namespace

nlohmann::json to_json(const TerminalIngredients& t)
{
    nlohmann::json j;
    j["k_gain"] = matrix_to_json(t.k_gain);
    j["p_matrix"] = matrix_to_json(t.p_matrix);
    j["alpha"] = t.alpha;
    j["xs"] = to_std(t.xs);
    j["us"] = to_std(t.us);
    if (t.verified) {
        const TerminalVerdict& v = *t.verified;
        j["verified"] = {{"passed", v.passed},
                         {"samples", v.samples},
                         {"admissibility_margin", v.admissibility_margin},
                         {"invariance_margin", v.invariance_margin},
                         {"decrease_margin", v.decrease_margin},
                         {"failed_check", v.failed_check},
                         {"worst_point", to_std(v.worst_point)}};
    }
    return j;
}

TerminalIngredients terminal_from_json(const nlohmann::json& j)
{
    TerminalIngredients t;
    t.k_gain = matrix_from_json(j.at("k_gain"), "k_gain");
    t.p_matrix = matrix_from_json(j.at("p_matrix"), "p_matrix");
    t.alpha = j.at("alpha").get<double>();
    t.xs = vector_from_json(j.at("xs"));
    t.us = vector_from_json(j.at("us"));
    if (j.contains("verified")) {
        const auto& jv = j.at("verified");
        TerminalVerdict v;
        v.passed = jv.at("passed").get<bool>();
        v.samples = jv.at("samples").get<int>();
        v.admissibility_margin = jv.at("admissibility_margin").get<double>();
        v.invariance_margin = jv.at("invariance_margin").get<double>();
        v.decrease_margin = jv.at("decrease_margin").get<double>();
        v.failed_check = jv.at("failed_check").get<std::string>();
        v.worst_point = vector_from_json(jv.at("worst_point"));
        t.verified = v;
    }
    if (t.p_matrix.rows() != t.xs.size() || t.k_gain.rows() != t.us.size() || !(t.alpha > 0.0)) {
        throw UsageError("terminal ingredients: inconsistent dimensions or non-positive alpha");
    }
    return t;
}

} // namespace empc
