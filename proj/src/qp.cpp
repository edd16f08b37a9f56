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
#include "empc/qp.hpp"

#include <cmath>
#include <limits>

namespace empc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Constraint i in the form n_i' x >= c_i (equalities: n_i' x == c_i).
struct ConstraintView {
    const QpProblem& qp;
    int me;

    Vector normal(int i) const
    {
        if (i < me) {
            return qp.a_eq.row(i).transpose();
        }
        return -qp.a_in.row(i - me).transpose();
    }
    double rhs(int i) const { return i < me ? qp.b_eq(i) : -qp.b_in(i - me); }
    double value(int i, const Vector& x) const { return normal(i).dot(x) - rhs(i); }
};

} // namespace

const char* to_string(QpStatus status)
{
    switch (status) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kInfeasible: return "infeasible";
    case QpStatus::kIterationLimit: return "iteration-limit";
    case QpStatus::kNotConvex: return "not-convex";
    }
    return "unknown";
}

QpResult solve_qp(const QpProblem& qp, double tolerance, int max_iterations)
{
    const int n = static_cast<int>(qp.hessian.rows());
    const int me = static_cast<int>(qp.a_eq.rows());
    const int mi = static_cast<int>(qp.a_in.rows());
    if (qp.hessian.cols() != n || qp.gradient.size() != n || (me > 0 && qp.a_eq.cols() != n) ||
        (mi > 0 && qp.a_in.cols() != n) || qp.b_eq.size() != me || qp.b_in.size() != mi) {
        throw UsageError("solve_qp: inconsistent problem dimensions");
    }
    if (max_iterations <= 0) {
        max_iterations = 20 * (n + me + mi) + 100;
    }

    QpResult result;
    result.lambda_eq = Vector::Zero(me);
    result.lambda_in = Vector::Zero(mi);

    Eigen::LLT<Matrix> llt(qp.hessian);
    if (llt.info() != Eigen::Success) {
        result.status = QpStatus::kNotConvex;
        result.x = Vector::Zero(n);
        return result;
    }
    const Matrix l_inv = llt.matrixL().solve(Matrix::Identity(n, n));

    const ConstraintView cons{qp, me};
    std::vector<int> active;
    std::vector<double> u;

    Vector x = -llt.solve(qp.gradient);

    // z: primal direction in the null space of the active normals, r: dual direction.
    auto directions = [&](const Vector& np, Vector& z, Vector& r) {
        const int q = static_cast<int>(active.size());
        if (q == 0) {
            z = l_inv.transpose() * (l_inv * np);
            r.resize(0);
            return;
        }
        Matrix normals(n, q);
        for (int k = 0; k < q; ++k) {
            normals.col(k) = cons.normal(active[k]);
        }
        const Eigen::HouseholderQR<Matrix> qr(l_inv * normals);
        const Matrix q_full = qr.householderQ() * Matrix::Identity(n, n);
        const Matrix j = l_inv.transpose() * q_full;
        const Matrix r_mat = qr.matrixQR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
        const Vector j1_np = j.leftCols(q).transpose() * np;
        r = r_mat.triangularView<Eigen::Upper>().solve(j1_np);
        if (q < n) {
            const auto j2 = j.rightCols(n - q);
            z = j2 * (j2.transpose() * np);
        } else {
            z = Vector::Zero(n);
        }
    };

    auto scale_of = [&](int i) {
        return 1.0 + std::abs(cons.rhs(i)) + cons.normal(i).lpNorm<Eigen::Infinity>() * x.lpNorm<Eigen::Infinity>();
    };

    int iterations = 0;
    Vector z;
    Vector r;

    // Equality constraints are added with full steps and never dropped.
    for (int i = 0; i < me; ++i) {
        const Vector np = cons.normal(i);
        directions(np, z, r);
        const double curvature = z.dot(np);
        const double s = cons.value(i, x);
        if (std::abs(curvature) <= 1e-14 * (1.0 + np.squaredNorm())) {
            if (std::abs(s) > 1e3 * tolerance * scale_of(i)) {
                result.status = QpStatus::kInfeasible;
                result.x = x;
                return result;
            }
            continue; // linearly dependent and consistent
        }
        const double t = -s / curvature;
        x += t * z;
        for (std::size_t k = 0; k < u.size(); ++k) {
            u[k] -= t * r(static_cast<Eigen::Index>(k));
        }
        u.push_back(t);
        active.push_back(i);
        ++iterations;
    }
    const std::size_t n_eq_active = active.size();

    while (true) {
        if (++iterations > max_iterations) {
            result.status = QpStatus::kIterationLimit;
            break;
        }
        int p = -1;
        double worst = 0.0;
        for (int j = 0; j < mi; ++j) {
            const int idx = me + j;
            bool is_active = false;
            for (std::size_t k = n_eq_active; k < active.size(); ++k) {
                if (active[k] == idx) {
                    is_active = true;
                    break;
                }
            }
            if (is_active) {
                continue;
            }
            const double s = cons.value(idx, x);
            const double scaled = s / scale_of(idx);
            if (scaled < -tolerance && scaled < worst) {
                worst = scaled;
                p = idx;
            }
        }
        if (p < 0) {
            result.status = QpStatus::kOptimal;
            break;
        }

        const Vector np = cons.normal(p);
        double u_new = 0.0;
        bool added = false;
        while (!added) {
            if (++iterations > max_iterations) {
                break;
            }
            directions(np, z, r);

            double t1 = kInf;
            int drop = -1;
            for (std::size_t k = n_eq_active; k < active.size(); ++k) {
                const double rk = r(static_cast<Eigen::Index>(k));
                if (rk > 0.0) {
                    const double ratio = u[k] / rk;
                    if (ratio < t1) {
                        t1 = ratio;
                        drop = static_cast<int>(k);
                    }
                }
            }
            const double curvature = z.dot(np);
            double t2 = kInf;
            if (z.lpNorm<Eigen::Infinity>() > 1e-14 * (1.0 + np.lpNorm<Eigen::Infinity>()) && curvature > 0.0) {
                t2 = -cons.value(p, x) / curvature;
            }
            const double t = std::min(t1, t2);
            if (!std::isfinite(t)) {
                result.status = QpStatus::kInfeasible;
                result.x = x;
                return result;
            }

            if (std::isfinite(t2)) {
                x += t * z;
            }
            for (std::size_t k = 0; k < active.size(); ++k) {
                u[k] -= t * r(static_cast<Eigen::Index>(k));
            }
            u_new += t;

            if (t == t2) {
                active.push_back(p);
                u.push_back(u_new);
                added = true;
            } else {
                active.erase(active.begin() + drop);
                u.erase(u.begin() + drop);
            }
        }
        if (!added) {
            result.status = QpStatus::kIterationLimit;
            break;
        }
    }

    result.x = x;
    result.iterations = iterations;
    result.objective = 0.5 * x.dot(qp.hessian * x) + qp.gradient.dot(x);
    for (std::size_t k = 0; k < active.size(); ++k) {
        const int idx = active[k];
        if (idx < me) {
            result.lambda_eq(idx) = -u[k];
        } else {
            result.lambda_in(idx - me) = u[k];
        }
    }
    return result;
}

} // namespace empc
