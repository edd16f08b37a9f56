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
#include "empc/nlp.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "empc/qp.hpp"

namespace empc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Evaluation {
    double f = 0.0;
    Vector g;
    Vector ce;
    Matrix je;
    Vector ci;
    Matrix ji;
};

void require_finite(const Vector& v, const char* what)
{
    if (!v.allFinite()) {
        throw CallbackError(fmt::format("nlp: {} returned a non-finite value", what));
    }
}

Evaluation evaluate(const NlpSpec& spec, const Vector& x, bool derivatives)
{
    Evaluation e;
    e.f = spec.objective(x, derivatives ? &e.g : nullptr);
    if (!std::isfinite(e.f)) {
        throw CallbackError("nlp: objective returned a non-finite value");
    }
    if (spec.n_eq > 0) {
        e.ce = spec.eq_constraints(x, derivatives ? &e.je : nullptr);
        require_finite(e.ce, "equality constraints");
    } else {
        e.ce.resize(0);
        e.je.resize(0, spec.n_vars);
    }
    if (spec.n_ineq > 0) {
        e.ci = spec.ineq_constraints(x, derivatives ? &e.ji : nullptr);
        require_finite(e.ci, "inequality constraints");
    } else {
        e.ci.resize(0);
        e.ji.resize(0, spec.n_vars);
    }
    if (derivatives) {
        require_finite(e.g, "objective gradient");
        if (e.g.size() != spec.n_vars || e.je.rows() != spec.n_eq || e.ji.rows() != spec.n_ineq ||
            (spec.n_eq > 0 && e.je.cols() != spec.n_vars) || (spec.n_ineq > 0 && e.ji.cols() != spec.n_vars)) {
            throw UsageError("nlp: callback derivative dimensions inconsistent with NlpSpec");
        }
        if (!e.je.allFinite() || !e.ji.allFinite()) {
            throw CallbackError("nlp: constraint Jacobian contains non-finite values");
        }
    }
    if (e.ce.size() != spec.n_eq || e.ci.size() != spec.n_ineq) {
        throw UsageError("nlp: constraint callback returned wrong number of rows");
    }
    return e;
}

double violation_inf(const Evaluation& e)
{
    double v = 0.0;
    if (e.ce.size() > 0) {
        v = e.ce.lpNorm<Eigen::Infinity>();
    }
    if (e.ci.size() > 0) {
        v = std::max(v, e.ci.maxCoeff());
    }
    return v;
}

double violation_l1(const Vector& ce, const Vector& ci)
{
    return ce.lpNorm<1>() + ci.cwiseMax(0.0).sum();
}

double bound_violation(const NlpSpec& spec, const Vector& x)
{
    return std::max({0.0, (spec.lower - x).maxCoeff(), (x - spec.upper).maxCoeff()});
}

struct BoundRows {
    std::vector<int> upper;
    std::vector<int> lower;
};

BoundRows finite_bounds(const NlpSpec& spec)
{
    BoundRows rows;
    for (int i = 0; i < spec.n_vars; ++i) {
        if (std::isfinite(spec.upper(i))) {
            rows.upper.push_back(i);
        }
        if (std::isfinite(spec.lower(i))) {
            rows.lower.push_back(i);
        }
    }
    return rows;
}

struct Subproblem {
    Vector step;
    Vector lambda_eq;
    Vector lambda_in;
    Vector lambda_bounds; // signed contribution to the Lagrangian gradient
    double linear_violation = 0.0;
    bool ok = false;
    bool elastic = false;
};

// Solves the QP around x with constraint constants (ce, ci); gradient rows from e.
Subproblem solve_subproblem(const NlpSpec& spec, const BoundRows& bounds, const Matrix& hessian, const Evaluation& e,
                            const Vector& ce, const Vector& ci, const Vector& x, double penalty)
{
    const int n = spec.n_vars;
    const int me = spec.n_eq;
    const int mi = spec.n_ineq;
    const int nb = static_cast<int>(bounds.upper.size() + bounds.lower.size());

    QpProblem qp;
    qp.hessian = hessian;
    qp.gradient = e.g;
    qp.a_eq = e.je;
    qp.b_eq = -ce;
    qp.a_in.setZero(mi + nb, n);
    qp.b_in.resize(mi + nb);
    if (mi > 0) {
        qp.a_in.topRows(mi) = e.ji;
        qp.b_in.head(mi) = -ci;
    }
    int row = mi;
    for (int i : bounds.upper) {
        qp.a_in(row, i) = 1.0;
        qp.b_in(row++) = spec.upper(i) - x(i);
    }
    for (int i : bounds.lower) {
        qp.a_in(row, i) = -1.0;
        qp.b_in(row++) = x(i) - spec.lower(i);
    }

    auto bound_multipliers = [&](const Vector& lambda_in) {
        Vector lb = Vector::Zero(n);
        int r = mi;
        for (int i : bounds.upper) {
            lb(i) += lambda_in(r++);
        }
        for (int i : bounds.lower) {
            lb(i) -= lambda_in(r++);
        }
        return lb;
    };

    Subproblem sub;
    const QpResult res = solve_qp(qp, 1e-13);
    if (res.status == QpStatus::kOptimal) {
        sub.step = res.x;
        sub.lambda_eq = res.lambda_eq;
        sub.lambda_in = res.lambda_in.head(mi);
        sub.lambda_bounds = bound_multipliers(res.lambda_in);
        sub.ok = true;
        return sub;
    }

    // Elastic mode: one shared relaxation s >= 0 penalized linearly.
    QpProblem el;
    el.hessian = Matrix::Zero(n + 1, n + 1);
    el.hessian.topLeftCorner(n, n) = hessian;
    el.hessian(n, n) = 1e-6 * std::max(1.0, penalty);
    el.gradient.resize(n + 1);
    el.gradient << e.g, 10.0 * std::max(1.0, penalty);
    el.a_eq.resize(0, n + 1);
    el.b_eq.resize(0);
    const int rows = 2 * me + mi + nb + 1;
    el.a_in.setZero(rows, n + 1);
    el.b_in.resize(rows);
    row = 0;
    for (int i = 0; i < me; ++i) {
        el.a_in.row(row).head(n) = e.je.row(i);
        el.a_in(row, n) = -1.0;
        el.b_in(row++) = -ce(i);
        el.a_in.row(row).head(n) = -e.je.row(i);
        el.a_in(row, n) = -1.0;
        el.b_in(row++) = ce(i);
    }
    for (int i = 0; i < mi; ++i) {
        el.a_in.row(row).head(n) = e.ji.row(i);
        el.a_in(row, n) = -1.0;
        el.b_in(row++) = -ci(i);
    }
    for (int r = 0; r < nb; ++r) {
        el.a_in.row(row).head(n) = qp.a_in.row(mi + r);
        el.b_in(row++) = qp.b_in(mi + r);
    }
    el.a_in(row, n) = -1.0;
    el.b_in(row) = 0.0;

    const QpResult eres = solve_qp(el, 1e-13);
    if (eres.status != QpStatus::kOptimal) {
        return sub;
    }
    sub.step = eres.x.head(n);
    sub.elastic = true;
    sub.ok = true;
    sub.lambda_eq = Vector::Zero(me);
    for (int i = 0; i < me; ++i) {
        sub.lambda_eq(i) = eres.lambda_in(2 * i) - eres.lambda_in(2 * i + 1);
    }
    sub.lambda_in = eres.lambda_in.segment(2 * me, mi);
    Vector lb = Vector::Zero(n);
    int r = 2 * me + mi;
    for (int i : bounds.upper) {
        lb(i) += eres.lambda_in(r++);
    }
    for (int i : bounds.lower) {
        lb(i) -= eres.lambda_in(r++);
    }
    sub.lambda_bounds = lb;
    const Vector ce_lin = ce + e.je * sub.step;
    const Vector ci_lin = ci + e.ji * sub.step;
    sub.linear_violation = violation_l1(ce_lin, ci_lin);
    return sub;
}

Vector lagrangian_gradient(const Evaluation& e, const Subproblem& sub)
{
    Vector grad = e.g + sub.lambda_bounds;
    if (e.je.rows() > 0) {
        grad += e.je.transpose() * sub.lambda_eq;
    }
    if (e.ji.rows() > 0) {
        grad += e.ji.transpose() * sub.lambda_in;
    }
    return grad;
}

double max_abs_multiplier(const Subproblem& sub)
{
    double m = 0.0;
    if (sub.lambda_eq.size() > 0) {
        m = sub.lambda_eq.lpNorm<Eigen::Infinity>();
    }
    if (sub.lambda_in.size() > 0) {
        m = std::max(m, sub.lambda_in.lpNorm<Eigen::Infinity>());
    }
    return m;
}

} // namespace

const char* to_string(NlpStatus status)
{
    switch (status) {
    case NlpStatus::kOptimal: return "optimal";
    case NlpStatus::kFeasibleSuboptimal: return "feasible-suboptimal";
    case NlpStatus::kInfeasible: return "infeasible";
    case NlpStatus::kIterationLimit: return "iteration-limit";
    }
    return "unknown";
}

void NlpSpec::validate() const
{
    if (n_vars < 1) {
        throw UsageError("NlpSpec: n_vars must be positive");
    }
    if (!objective) {
        throw UsageError("NlpSpec: missing objective");
    }
    if ((n_eq > 0 && !eq_constraints) || (n_ineq > 0 && !ineq_constraints) || n_eq < 0 || n_ineq < 0) {
        throw UsageError("NlpSpec: constraint callbacks inconsistent with row counts");
    }
    require_dim(lower, n_vars, "NlpSpec lower bounds");
    require_dim(upper, n_vars, "NlpSpec upper bounds");
    require_dim(initial_point, n_vars, "NlpSpec initial point");
    if ((lower.array() > upper.array()).any()) {
        throw UsageError("NlpSpec: lower bound exceeds upper bound");
    }
}

double max_constraint_violation(const NlpSpec& spec, const Vector& x)
{
    const Evaluation e = evaluate(spec, x, false);
    return std::max(violation_inf(e), bound_violation(spec, x));
}

NlpResult solve(const NlpSpec& spec, const NlpOptions& options)
{
    spec.validate();
    const int n = spec.n_vars;
    const BoundRows bounds = finite_bounds(spec);

    Vector x = spec.initial_point.cwiseMax(spec.lower).cwiseMin(spec.upper);
    Evaluation e = evaluate(spec, x, true);
    Matrix hessian = Matrix::Identity(n, n);
    bool hessian_scaled = false;
    double penalty = 1.0;

    NlpResult best;
    bool have_best = false;
    auto record = [&](const Vector& point, const Evaluation& ev) {
        const double viol = violation_inf(ev);
        if (viol <= options.feas_tol && (!have_best || ev.f < best.objective)) {
            best.x = point;
            best.objective = ev.f;
            best.max_violation = viol;
            have_best = true;
        }
    };
    record(x, e);

    auto merit = [&](const Evaluation& ev) { return ev.f + penalty * violation_l1(ev.ce, ev.ci); };

    NlpResult out;
    int line_search_failures = 0;
    int iter = 0;
    for (; iter < options.max_iter; ++iter) {
        const Subproblem sub = solve_subproblem(spec, bounds, hessian, e, e.ce, e.ci, x, penalty);
        if (!sub.ok) {
            hessian = Matrix::Identity(n, n);
            if (++line_search_failures > 2) {
                break;
            }
            continue;
        }
        const double viol = violation_inf(e);
        const Vector grad_l = lagrangian_gradient(e, sub);
        const double stationarity = grad_l.lpNorm<Eigen::Infinity>() / std::max(1.0, e.g.lpNorm<Eigen::Infinity>());
        const double step_norm = sub.step.lpNorm<Eigen::Infinity>();
        if (!sub.elastic && viol <= options.feas_tol &&
            (stationarity <= options.opt_tol || step_norm <= 1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>()))) {
            out.x = x;
            out.objective = e.f;
            out.max_violation = viol;
            out.stationarity = stationarity;
            out.status = NlpStatus::kOptimal;
            out.iterations = iter;
            return out;
        }

        penalty = std::max(penalty, 1.5 * max_abs_multiplier(sub) + 1e-3);
        const double phi0 = merit(e);
        const double viol1 = violation_l1(e.ce, e.ci);
        double slope = e.g.dot(sub.step) - penalty * (viol1 - sub.linear_violation);
        if (slope >= 0.0 && step_norm > 0.0) {
            // Not a descent direction for the merit function; the quasi-Newton model is stale.
            slope = -1e-12;
        }

        Vector x_new;
        Evaluation e_new;
        bool accepted = false;
        double alpha = 1.0;
        for (int ls = 0; ls < 40; ++ls) {
            const Vector trial = x + alpha * sub.step;
            Evaluation et = evaluate(spec, trial, false);
            if (merit(et) <= phi0 + 1e-4 * alpha * slope) {
                x_new = trial;
                accepted = true;
                break;
            }
            if (ls == 0) {
                // Second-order correction against curvature of the active constraints.
                const Vector ce_soc = et.ce - e.je * sub.step;
                const Vector ci_soc = et.ci - e.ji * sub.step;
                const Subproblem soc = solve_subproblem(spec, bounds, hessian, e, ce_soc, ci_soc, x, penalty);
                if (soc.ok && !soc.elastic) {
                    const Vector trial_soc = x + soc.step;
                    Evaluation es = evaluate(spec, trial_soc, false);
                    if (merit(es) <= phi0 + 1e-4 * slope) {
                        x_new = trial_soc;
                        accepted = true;
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (++line_search_failures > 2) {
                break;
            }
            hessian = Matrix::Identity(n, n);
            hessian_scaled = false;
            continue;
        }
        line_search_failures = 0;

        e_new = evaluate(spec, x_new, true);
        record(x_new, e_new);

        const Vector s = x_new - x;
        const Vector y = lagrangian_gradient(e_new, sub) - grad_l;
        if (s.norm() > 1e-14) {
            double sy = s.dot(y);
            if (!hessian_scaled && sy > 1e-12) {
                hessian = (y.squaredNorm() / sy) * Matrix::Identity(n, n);
                hessian_scaled = true;
            }
            const Vector hs = hessian * s;
            const double shs = s.dot(hs);
            Vector r = y;
            if (sy < 0.2 * shs) {
                const double theta = 0.8 * shs / (shs - sy);
                r = theta * y + (1.0 - theta) * hs;
                sy = s.dot(r);
            }
            if (sy > 1e-16 && shs > 1e-16) {
                hessian += (r * r.transpose()) / sy - (hs * hs.transpose()) / shs;
                hessian = 0.5 * (hessian + hessian.transpose());
            }
        }
        x = x_new;
        e = std::move(e_new);
    }

    out.iterations = iter;
    if (have_best) {
        out.x = best.x;
        out.objective = best.objective;
        out.max_violation = best.max_violation;
        out.status = iter >= options.max_iter ? NlpStatus::kIterationLimit : NlpStatus::kFeasibleSuboptimal;
    } else {
        out.x = x;
        out.objective = e.f;
        out.max_violation = violation_inf(e);
        out.status = NlpStatus::kInfeasible;
    }
    return out;
}

} // namespace empc
