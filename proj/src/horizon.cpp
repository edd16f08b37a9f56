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
#include "empc/horizon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "empc/sampling.hpp"

namespace empc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite_level(const std::optional<double>& level) { return level && std::isfinite(*level); }

// Map z -> (objective, inequality rows). Shared by the objective and
// constraint callbacks so one rollout serves both.
class HorizonFunctions {
public:
    HorizonFunctions(std::shared_ptr<const HorizonContext> ctx, HorizonKind kind, Vector x0, LyapunovLevels levels)
        : ctx_(std::move(ctx)), kind_(kind), x0_(std::move(x0)), levels_(levels)
    {
        const auto& box = ctx_->model.state_box();
        for (int i = 0; i < ctx_->model.n_x(); ++i) {
            if (std::isfinite(box.lower(i))) {
                box_rows_.push_back({i, -1.0, box.lower(i)});
            }
            if (std::isfinite(box.upper(i))) {
                box_rows_.push_back({i, 1.0, box.upper(i)});
            }
        }
        with_terminal_ = kind_ != HorizonKind::kFeasibility;
        with_eta_ = kind_ == HorizonKind::kEconEta && finite_level(levels_.eta);
        with_xi_ = kind_ == HorizonKind::kEconXiZeta && finite_level(levels_.xi);
        with_zeta_ = (kind_ == HorizonKind::kEconXiZeta || kind_ == HorizonKind::kEconZeta) &&
                     finite_level(levels_.zeta);
    }

    int n_ineq() const
    {
        const int n = ctx_->horizon;
        return n * static_cast<int>(ctx_->model.input_set().a.rows()) + n * static_cast<int>(box_rows_.size()) +
               (with_terminal_ ? 1 : 0) + (with_eta_ ? 1 : 0) + (with_xi_ ? 1 : 0) + (with_zeta_ ? 1 : 0);
    }

    double objective(const Vector& z, Vector* grad) const
    {
        if (ctx_->differentiation == Differentiation::kFiniteDifference && grad) {
            *grad = central_difference([&](const Vector& v) { return Vector::Constant(1, objective(v, nullptr)); },
                                       z)
                        .row(0)
                        .transpose();
            return objective(z, nullptr);
        }
        const HorizonEvaluation& e = eval(z, grad != nullptr);
        switch (kind_) {
        case HorizonKind::kTracking:
            if (grad) {
                *grad = e.grad_v_tracking;
            }
            return e.v_tracking;
        case HorizonKind::kFeasibility:
            if (grad) {
                *grad = e.grad_terminal_level;
            }
            return e.terminal_level;
        default:
            if (grad) {
                *grad = e.grad_v_econ;
            }
            return e.v_econ;
        }
    }

    Vector constraints(const Vector& z, Matrix* jac) const
    {
        if (ctx_->differentiation == Differentiation::kFiniteDifference && jac) {
            *jac = central_difference([&](const Vector& v) { return constraints(v, nullptr); }, z);
            return constraints(z, nullptr);
        }
        const HorizonEvaluation& e = eval(z, jac != nullptr);
        const SystemModel& model = ctx_->model;
        const InputSet& set = model.input_set();
        const int n = ctx_->horizon;
        const int n_u = model.n_u();
        const int n_z = ctx_->n_vars();
        Vector c(n_ineq());
        if (jac) {
            jac->setZero(n_ineq(), n_z);
        }
        int row = 0;
        for (int k = 0; k < n; ++k) {
            const Vector uk = z.segment(k * n_u, n_u);
            for (Eigen::Index r = 0; r < set.a.rows(); ++r, ++row) {
                c(row) = set.a.row(r).dot(uk) - set.b(r);
                if (jac) {
                    jac->block(row, k * n_u, 1, n_u) = set.a.row(r);
                }
            }
        }
        for (int k = 0; k < n; ++k) {
            for (const BoxRow& b : box_rows_) {
                c(row) = b.sign * (e.states[static_cast<std::size_t>(k)](b.index) - b.bound);
                if (jac) {
                    jac->row(row) = b.sign * e.sensitivities[static_cast<std::size_t>(k)].row(b.index);
                }
                ++row;
            }
        }
        if (with_terminal_) {
            c(row) = e.terminal_level - ctx_->terminal.alpha;
            if (jac) {
                jac->row(row) = e.grad_terminal_level.transpose();
            }
            ++row;
        }
        if (with_eta_) {
            c(row) = e.v_delta - *levels_.eta;
            if (jac) {
                jac->row(row) = e.grad_v_delta.transpose();
            }
            ++row;
        }
        if (with_xi_) {
            c(row) = e.v_delta - *levels_.xi;
            if (jac) {
                jac->row(row) = e.grad_v_delta.transpose();
            }
            ++row;
        }
        if (with_zeta_) {
            c(row) = e.v_delta - levels_.beta * e.j_delta - *levels_.zeta;
            if (jac) {
                jac->row(row) = (e.grad_v_delta - levels_.beta * e.grad_j_delta).transpose();
            }
            ++row;
        }
        return c;
    }

private:
    struct BoxRow {
        int index;
        double sign;
        double bound;
    };

    const HorizonEvaluation& eval(const Vector& z, bool gradients) const
    {
        const bool hit = cached_ && cache_z_.size() == z.size() && cache_z_ == z && (cache_has_grad_ || !gradients);
        if (!hit) {
            cache_ = evaluate_horizon(*ctx_, x0_, z, gradients);
            cache_z_ = z;
            cache_has_grad_ = gradients;
            cached_ = true;
        }
        return cache_;
    }

    template <typename F>
    Matrix central_difference(F&& f, const Vector& z) const
    {
        Matrix jac;
        for (Eigen::Index j = 0; j < z.size(); ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(z(j)));
            Vector zp = z;
            Vector zm = z;
            zp(j) += h;
            zm(j) -= h;
            const Vector d = (f(zp) - f(zm)) / (2.0 * h);
            if (jac.size() == 0) {
                jac.resize(d.size(), z.size());
            }
            jac.col(j) = d;
        }
        return jac;
    }

    std::shared_ptr<const HorizonContext> ctx_;
    HorizonKind kind_;
    Vector x0_;
    LyapunovLevels levels_;
    std::vector<BoxRow> box_rows_;
    bool with_terminal_ = true;
    bool with_eta_ = false;
    bool with_xi_ = false;
    bool with_zeta_ = false;

    mutable bool cached_ = false;
    mutable bool cache_has_grad_ = false;
    mutable Vector cache_z_;
    mutable HorizonEvaluation cache_;
};

} // namespace

const char* to_string(HorizonKind kind)
{
    switch (kind) {
    case HorizonKind::kTracking:
        return "tracking";
    case HorizonKind::kEconPlain:
        return "econ-plain";
    case HorizonKind::kEconEta:
        return "econ-eta";
    case HorizonKind::kEconXiZeta:
        return "econ-xi-zeta";
    case HorizonKind::kEconZeta:
        return "econ-zeta";
    case HorizonKind::kFeasibility:
        return "feasibility";
    }
    return "unknown";
}

HorizonKind horizon_kind_from_string(const std::string& name)
{
    for (HorizonKind k : {HorizonKind::kTracking, HorizonKind::kEconPlain, HorizonKind::kEconEta,
                          HorizonKind::kEconXiZeta, HorizonKind::kEconZeta, HorizonKind::kFeasibility}) {
        if (name == to_string(k)) {
            return k;
        }
    }
    throw UsageError(fmt::format("unknown horizon problem kind '{}'", name));
}

HorizonContext::HorizonContext(SystemModel model_in, const CostSuite& costs_in, TerminalIngredients terminal_in,
                               int horizon_in, Differentiation differentiation_in)
    : model(std::move(model_in)),
      costs(with_terminal(costs_in, terminal_in)),
      terminal(std::move(terminal_in)),
      horizon(horizon_in),
      differentiation(differentiation_in)
{
    if (horizon < 1) {
        throw UsageError("HorizonContext: horizon must be >= 1");
    }
    require_dim(costs.xs, model.n_x(), "HorizonContext: xs");
    require_dim(costs.us, model.n_u(), "HorizonContext: us");
}

HorizonEvaluation evaluate_horizon(const HorizonContext& ctx, const Vector& x0, const Vector& z, bool with_gradients)
{
    const SystemModel& model = ctx.model;
    const CostSuite& costs = ctx.costs;
    const int n = ctx.horizon;
    const int n_x = model.n_x();
    const int n_u = model.n_u();
    const int n_z = ctx.n_vars();
    require_dim(x0, n_x, "evaluate_horizon: x0");
    require_dim(z, n_z, "evaluate_horizon: decision vector");

    HorizonEvaluation e;
    e.states.reserve(static_cast<std::size_t>(n) + 1);
    e.states.push_back(x0);
    if (with_gradients) {
        e.sensitivities.reserve(static_cast<std::size_t>(n) + 1);
        e.sensitivities.push_back(Matrix::Zero(n_x, n_z));
        e.grad_v_delta = Vector::Zero(n_z);
        e.grad_j_delta = Vector::Zero(n_z);
        e.grad_v_tracking = Vector::Zero(n_z);
        e.grad_v_econ = Vector::Zero(n_z);
    }
    Matrix fx;
    Matrix fu;
    for (int k = 0; k < n; ++k) {
        const Vector& xk = e.states.back();
        const Vector uk = z.segment(k * n_u, n_u);
        const StageValue l = costs.tracking_stage(xk, uk);
        const StageValue d = costs.delta(xk, uk);
        const StageValue le = costs.econ_stage(xk, uk);
        e.v_tracking += l.value;
        e.v_delta += l.value + k * d.value;
        e.j_delta += k == 0 ? l.value : d.value;
        e.v_econ += le.value;
        if (with_gradients) {
            const Matrix& s = e.sensitivities.back();
            auto add = [&](Vector& g, const StageValue& v, double w) {
                g.noalias() += w * (s.transpose() * v.dx);
                g.segment(k * n_u, n_u) += w * v.du;
            };
            add(e.grad_v_tracking, l, 1.0);
            add(e.grad_v_delta, l, 1.0);
            add(e.grad_v_delta, d, k);
            add(e.grad_j_delta, k == 0 ? l : d, 1.0);
            add(e.grad_v_econ, le, 1.0);
            model.jacobians(xk, uk, fx, fu);
            Matrix next = fx * s;
            next.middleCols(k * n_u, n_u) += fu;
            e.sensitivities.push_back(std::move(next));
        }
        e.states.push_back(model.step(xk, uk));
    }
    const Vector& xn = e.states.back();
    const StageValue lf = costs.terminal(xn);
    const StageValue g = costs.gamma(xn);
    e.terminal_level = lf.value;
    e.v_tracking += lf.value;
    e.v_delta += lf.value;
    e.j_delta += g.value;
    if (with_gradients) {
        const Matrix& s = e.sensitivities.back();
        e.grad_terminal_level = s.transpose() * lf.dx;
        e.grad_v_tracking += e.grad_terminal_level;
        e.grad_v_delta += e.grad_terminal_level;
        e.grad_j_delta += s.transpose() * g.dx;
    }
    return e;
}

NlpSpec build_horizon_problem(std::shared_ptr<const HorizonContext> ctx, HorizonKind kind, const Vector& x0,
                              const LyapunovLevels& levels, const Vector& initial_point)
{
    if (!ctx) {
        throw UsageError("build_horizon_problem: missing context");
    }
    if (!(levels.beta > 0.0 && levels.beta <= 1.0)) {
        throw UsageError("build_horizon_problem: beta must lie in (0, 1]");
    }
    if (kind == HorizonKind::kEconEta && !levels.eta) {
        throw UsageError("build_horizon_problem: econ-eta requires eta");
    }
    if (kind == HorizonKind::kEconXiZeta && (!levels.xi || !levels.zeta)) {
        throw UsageError("build_horizon_problem: econ-xi-zeta requires xi and zeta");
    }
    if (kind == HorizonKind::kEconZeta && !levels.zeta) {
        throw UsageError("build_horizon_problem: econ-zeta requires zeta");
    }
    require_dim(x0, ctx->model.n_x(), "build_horizon_problem: x0");
    require_dim(initial_point, ctx->n_vars(), "build_horizon_problem: initial point");

    const auto fns = std::make_shared<HorizonFunctions>(ctx, kind, x0, levels);
    const InputSet& set = ctx->model.input_set();
    NlpSpec spec;
    spec.n_vars = ctx->n_vars();
    spec.objective = [fns](const Vector& z, Vector* grad) { return fns->objective(z, grad); };
    spec.n_eq = 0;
    spec.n_ineq = fns->n_ineq();
    spec.ineq_constraints = [fns](const Vector& z, Matrix* jac) { return fns->constraints(z, jac); };
    spec.lower = set.lower.replicate(ctx->horizon, 1);
    spec.upper = set.upper.replicate(ctx->horizon, 1);
    spec.initial_point = initial_point.cwiseMax(spec.lower).cwiseMin(spec.upper);
    return spec;
}

Sequence warm_start_shift(const Sequence& prev_useq, const Vector& prev_x_n, const TerminalIngredients& ingredients)
{
    if (prev_useq.empty()) {
        throw UsageError("warm_start_shift: empty control sequence");
    }
    Sequence out(prev_useq.begin() + 1, prev_useq.end());
    out.push_back(ingredients.kappa(prev_x_n));
    return out;
}

double box_quadratic_max(const Matrix& w, const Vector& center, const Vector& lo, const Vector& hi)
{
    const Eigen::Index n = center.size();
    if (n > 20) {
        throw UsageError("box_quadratic_max: dimension too large for vertex enumeration");
    }
    if (!lo.allFinite() || !hi.allFinite()) {
        return kInf;
    }
    double best = -kInf;
    Vector v(n);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        for (Eigen::Index i = 0; i < n; ++i) {
            v(i) = (mask >> i) & 1U ? hi(i) : lo(i);
        }
        const Vector d = v - center;
        best = std::max(best, d.dot(w * d));
    }
    return best;
}

VMaxReport compute_v_max(const SystemModel& model, const CostSuite& costs, const TerminalIngredients& ingredients,
                         int horizon, int n_samples, std::uint64_t seed)
{
    const int n_x = model.n_x();
    const int n_u = model.n_u();
    const CostSuite suite = with_terminal(costs, ingredients);
    const StateBox& box = model.state_box();
    const InputSet& set = model.input_set();

    Vector center(n_x + n_u);
    center << suite.xs, suite.us;
    Vector lo(n_x + n_u);
    lo << box.lower, set.lower;
    Vector hi(n_x + n_u);
    hi << box.upper, set.upper;
    Matrix w_stage = Matrix::Zero(n_x + n_u, n_x + n_u);
    w_stage.topLeftCorner(n_x, n_x) = suite.weights.q;
    w_stage.bottomRightCorner(n_u, n_u) = suite.weights.r;

    VMaxReport rep;
    rep.stage_max = box_quadratic_max(w_stage, center, lo, hi);
    rep.delta_max = suite.penalties.delta_coeff *
                    box_quadratic_max(Matrix::Identity(n_x + n_u, n_x + n_u), center, lo, hi);
    rep.terminal_max =
        std::min(ingredients.alpha, box_quadratic_max(suite.weights.p, suite.xs, box.lower, box.upper));
    const double nn = horizon;
    rep.bound = nn * rep.stage_max + 0.5 * nn * (nn - 1.0) * rep.delta_max + rep.terminal_max;
    if (!std::isfinite(rep.bound)) {
        throw UsageError("compute_v_max: X and U must be bounded");
    }

    if (n_samples > 0) {
        const auto pairs = sample_feasible_pairs(model, ingredients, horizon, n_samples, seed);
        rep.samples = static_cast<int>(pairs.size());
        rep.sampled_max = -kInf;
        for (const FeasiblePair& p : pairs) {
            rep.sampled_max = std::max(rep.sampled_max, v_delta(model, suite, p.useq, p.x0));
        }
        if (rep.sampled_max > rep.bound * (1.0 + 1e-12)) {
            throw NumericalError(fmt::format("compute_v_max: sampled V^delta {:.6g} exceeds the bound {:.6g}",
                                             rep.sampled_max, rep.bound));
        }
    }
    return rep;
}

} // namespace empc
