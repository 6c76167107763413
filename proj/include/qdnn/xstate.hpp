#pragma once

// X-states (non-zero entries only on the diagonal and anti-diagonal) and
// their closed-form conditional entropies.

#include <array>
#include <optional>

#include "qdnn/quantum.hpp"

namespace qdnn {

/// rho11 = x1, rho22 = x2, rho33 = x3, rho44 = 1 - x1 - x2 - x3,
/// rho14 = x4 + i x5, rho23 = x6 + i x7.
struct XStateParams {
  std::array<double, 7> x{};

  double rho11() const noexcept { return x[0]; }
  double rho22() const noexcept { return x[1]; }
  double rho33() const noexcept { return x[2]; }
  double rho44() const noexcept { return 1.0 - x[0] - x[1] - x[2]; }
  Complex rho14() const noexcept { return {x[3], x[4]}; }
  Complex rho23() const noexcept { return {x[5], x[6]}; }
};

/// Slack allowed on the coherence inequalities for rounding in callers
/// that build parameters at the boundary.
inline constexpr double kXStateSlack = 1e-14;

/// Throws ConstraintViolated naming the first failing inequality.
void check_xstate_constraints(const XStateParams& p);

/// Unchecked assembly of the 4x4 matrix.
CMatrix4 xstate_matrix(const XStateParams& p);

DensityMatrix xstate_from_params(const XStateParams& p);

/// Inverse of xstate_matrix. Throws FamilyMismatch when entries outside the
/// X pattern exceed `tol`.
XStateParams xstate_params_from_matrix(const CMatrix& m, double tol = 1e-12);

/// Conditional entropies at three orthogonal measurement axes: z, and the
/// equatorial pair aligned with the phases of rho14 and rho23. For real
/// X-states with equal-sign coherences the equatorial axes are Pauli x and y.
struct CandidateSet {
  double s_z = 0.0;
  double s_x = 0.0;
  double s_y = 0.0;
  BlochDirection axis_z;
  BlochDirection axis_x;
  BlochDirection axis_y;

  double min() const noexcept;
};

/// -((1-t)/2) log2((1-t)/2) - ((1+t)/2) log2((1+t)/2): entropy of a qubit
/// state with Bloch radius t, t in [0, 1].
double bloch_entropy(double t) noexcept;

CandidateSet pauli_candidates(const XStateParams& p);

double analytic_c(const XStateParams& p);

/// The one-parameter example family. Its trace is 1 + 0.2 a, so it is a
/// density matrix only at a = 0; see normalized_example_state().
CMatrix4 example_state(double a);

/// example_state(a) divided by its trace.
CMatrix4 normalized_example_state(double a);

/// Whether normalized_example_state(a) passes validation.
bool example_state_valid(double a);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Connected interval around a = 0 on which the normalized family is a
/// valid state, located by bisection to `tol`.
Interval example_valid_interval(double tol = 1e-10);

/// Closed-form candidates of the example family, evaluated verbatim in a.
struct ExampleSolution {
  double a = 0.0;
  std::array<double, 4> theta{};  // theta1 .. theta4
  double curve_z = 0.0;           // (0.55+0.15a) S'(theta1) + (0.45-0.15a) S'(theta2)
  double curve_theta3 = 0.0;      // S'(theta3)
  double curve_theta4 = 0.0;      // S'(theta4)
  double c = 0.0;                 // min of the three curves
};

/// Throws DomainError if any theta exceeds 1 by more than 1e-12.
ExampleSolution example_analytic_c(double a);

}  // namespace qdnn
