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
#ifndef EMPC_DYNAMICS_HPP
#define EMPC_DYNAMICS_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "empc/common.hpp"

namespace empc {

/// Per-coordinate box, used for the hard state constraint set X.
struct StateBox {
    Vector lower;
    Vector upper;
};

/**
 * @brief Control constraint set U = {u : a*u <= b, lower <= u <= upper}.
 *
 * Bounds may be infinite. `a` may have zero rows.
 */
struct InputSet {
    Matrix a;
    Vector b;
    Vector lower;
    Vector upper;
};

/// Signed slack of a single constraint row; satisfied iff slack >= -tolerance.
struct ConstraintSlack {
    std::string name;
    double slack = 0.0;
};

struct AdmissibilityVerdict {
    bool state_ok = true;
    bool input_ok = true;
    std::vector<ConstraintSlack> rows;

    bool admissible() const { return state_ok && input_ok; }
    /// First row with slack below -tolerance, if any.
    std::optional<ConstraintSlack> first_violation(double tolerance = 1e-8) const;
    double min_slack() const;
};

/**
 * @brief Discrete-time system x(t+1) = f(x(t), u(t)) with constraint sets.
 *
 * Immutable after construction. Jacobians are analytic when a callback is
 * supplied, otherwise central finite differences of the step map.
 */
class SystemModel {
public:
    using StepMap = std::function<Vector(const Vector&, const Vector&)>;
    using JacobianMap = std::function<void(const Vector&, const Vector&, Matrix& fx, Matrix& fu)>;

    SystemModel(int n_x, int n_u, StepMap step_map, StateBox state_box, InputSet input_set,
                std::vector<Vector> asymptotic_set, double dt, JacobianMap jacobian = {});

    int n_x() const { return n_x_; }
    int n_u() const { return n_u_; }
    double dt() const { return dt_; }
    const StateBox& state_box() const { return state_box_; }
    const InputSet& input_set() const { return input_set_; }
    const std::vector<Vector>& asymptotic_set() const { return asymptotic_set_; }
    bool has_analytic_jacobian() const { return static_cast<bool>(jacobian_); }

    Vector step(const Vector& x, const Vector& u) const;

    /// Returns (x_0, ..., x_N) with x_0 = x0.
    Sequence rollout(const Vector& x0, const Sequence& useq) const;

    void jacobians(const Vector& x, const Vector& u, Matrix& fx, Matrix& fu) const;
    void finite_difference_jacobians(const Vector& x, const Vector& u, Matrix& fx, Matrix& fu) const;

    AdmissibilityVerdict is_admissible(const Vector& x, const Vector& u, double tolerance = 1e-8) const;
    bool state_in_box(const Vector& x, double tolerance = 1e-8) const;
    bool input_in_set(const Vector& u, double tolerance = 1e-8) const;
    /// Smallest signed slack over the rows of U.
    double input_slack(const Vector& u) const;

private:
    int n_x_;
    int n_u_;
    StepMap step_map_;
    StateBox state_box_;
    InputSet input_set_;
    std::vector<Vector> asymptotic_set_;
    double dt_;
    JacobianMap jacobian_;
};

/// Two-zone RC thermal parameters. Defaults are the published case-study values.
struct TwoZoneHvacParams {
    double c1 = 9.163e3;   // kJ/K
    double c2 = 9.163e3;   // kJ/K
    double cp = 1.012;     // kJ/(kg K)
    double r12 = 14.0;
    double r1o = 50.0;
    double r2o = 50.0;
    double ts1 = 15.0;     // supply air, degC
    double ts2 = 15.0;
    double to = 32.0;      // outside air, degC
    double q1 = 4.0;       // internal load, kW
    double q2 = 4.0;
    double dt_seconds = 600.0;

    void validate() const;
};

/**
 * @brief x+ = A x + diag(g_coeff .* (g_offset - x)) u + d.
 */
struct AffineBilinearModel {
    Matrix a_matrix;
    Vector g_coeff;
    Vector g_offset;
    Vector d_vector;

    int n_x() const { return static_cast<int>(a_matrix.rows()); }
    Vector step(const Vector& x, const Vector& u) const;
    Matrix input_matrix(const Vector& x) const;
    void validate() const;
};

enum class Discretization { kForwardEuler, kMatrixExponential };

/// Discretize the two-zone RC model. The bilinear input term always uses dt*cp/c_i.
AffineBilinearModel discretize_rc(const TwoZoneHvacParams& params,
                                  Discretization method = Discretization::kForwardEuler);

/// The rounded two-zone model as printed with the case study (A, 0.0663, d).
AffineBilinearModel printed_two_zone_model(double g_offset = 15.0);

/// Admissible sets of the HVAC case study: flows >= 0 and u1 + u2 <= 3.2.
InputSet hvac_input_set(double max_total_flow = 3.2);
StateBox hvac_state_box(double lower = 15.0, double upper = 35.0);

/// Wrap an affine-bilinear model as a SystemModel with analytic Jacobians.
SystemModel make_system(const AffineBilinearModel& model, StateBox state_box, InputSet input_set,
                        std::vector<Vector> asymptotic_set, double dt);

} // namespace empc

#endif // EMPC_DYNAMICS_HPP
