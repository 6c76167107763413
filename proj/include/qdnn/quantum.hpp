#pragma once

// Two-qubit quantum-information primitives and the measurement optimization
// that defines the discord optimization term
//
//   c(rho) = min over projective measurements {B_k} on qubit B of
//            sum_k p_k S(rho_k).
//
// Composite index convention: basis state |a b> sits at row 2*a + b, so
// qubit A is the more significant bit. All entropies are in bits.

#include <Eigen/Core>
#include <array>
#include <complex>
#include <cstddef>
#include <optional>

namespace qdnn {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CMatrix2 = Eigen::Matrix2cd;
using CMatrix4 = Eigen::Matrix4cd;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kTraceTol = 1e-12;
/// Eigenvalues in [-kPsdTol, 0) are rounding noise and clamp to zero.
inline constexpr double kPsdTol = 1e-10;
/// Measurement outcomes at or below this probability carry no state.
inline constexpr double kNullProbability = 1e-12;

/// Validated Hermitian, unit-trace, positive-semidefinite operator of
/// dimension 2 or 4. Only obtainable through validate_density_matrix() or
/// from library operations that preserve the invariants.
class DensityMatrix {
 public:
  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const noexcept { return m_; }
  Complex operator()(int i, int j) const noexcept { return m_(i, j); }

  /// Fixed-size copy; requires dim() == 4.
  CMatrix4 matrix4() const;

 private:
  explicit DensityMatrix(CMatrix m) : m_(std::move(m)) {}

  CMatrix m_;

  friend DensityMatrix validate_density_matrix(const CMatrix& m);
  friend struct DensityMatrixAccess;
};

/// Measurement axis on the Bloch sphere of qubit B.
struct BlochDirection {
  double theta = 0.0;  // polar angle, [0, pi]
  double phi = 0.0;    // azimuth, [0, 2 pi)

  Eigen::Vector3d unit_vector() const noexcept;
  BlochDirection antipode() const noexcept;

  /// Canonical angles for an arbitrary (theta, phi), e.g. an unconstrained
  /// optimizer iterate: theta folded into [0, pi], phi into [0, 2 pi).
  static BlochDirection canonical(double theta, double phi) noexcept;
  static BlochDirection from_vector(const Eigen::Vector3d& n) noexcept;

  static BlochDirection z() noexcept { return {0.0, 0.0}; }
  static BlochDirection x() noexcept;
  static BlochDirection y() noexcept;
};

struct ProjectorPair {
  CMatrix2 plus;   // (I + n.sigma) / 2
  CMatrix2 minus;  // (I - n.sigma) / 2
};

struct MeasurementOutcome {
  double probability = 0.0;
  /// Post-measurement state, absent when probability <= kNullProbability.
  std::optional<DensityMatrix> state;
};

/// Outcomes ordered (+, -) along the measurement direction.
struct ConditionalEnsemble {
  std::array<MeasurementOutcome, 2> outcomes;
};

struct OptimizerConfig {
  int theta_points = 33;  // coarse grid over theta in [0, pi/2]
  int phi_points = 64;    // coarse grid over phi in [0, 2 pi)
  int starts = 3;         // best grid points refined by simplex descent
  double tol = 1e-8;      // value tolerance of the refinement
  int max_iterations = 400;

  /// Throws Error(ConfigInvalid).
  void validate() const;
};

struct OptimizationResult {
  double c_min = 0.0;  // bits
  BlochDirection argmin;
  std::size_t evaluations = 0;
};

enum class Subsystem { A, B };

/// Symmetrizes asymmetry below kHermitianTol; rejects with NotHermitian,
/// TraceNotOne or NotPositive otherwise.
DensityMatrix validate_density_matrix(const CMatrix& m);

/// Ascending eigenvalues of a Hermitian matrix.
Eigen::VectorXd hermitian_eigenvalues(const CMatrix& m);

/// -sum lambda log2 lambda with 0 log 0 = 0.
double von_neumann_entropy(const DensityMatrix& rho);

/// Shannon entropy of a spectrum, clamping [-kPsdTol, 0) to zero;
/// throws NotPositive below that. Result clamped to [0, log2(size)].
double entropy_of_spectrum(const double* eigenvalues, std::size_t size);

DensityMatrix partial_trace(const DensityMatrix& rho, Subsystem keep);

ProjectorPair measurement_projectors(const BlochDirection& dir);

ConditionalEnsemble measure_B(const DensityMatrix& rho, const BlochDirection& dir);

double conditional_entropy(const DensityMatrix& rho, const BlochDirection& dir);

OptimizationResult minimize_conditional_entropy(const DensityMatrix& rho,
                                                const OptimizerConfig& cfg = {});

double mutual_information(const DensityMatrix& rho);

double classical_correlation(const DensityMatrix& rho, const OptimizerConfig& cfg = {});

double quantum_discord(const DensityMatrix& rho, const OptimizerConfig& cfg = {});

/// Everything the discord computation produces in one pass.
struct DiscordReport {
  double entropy_a = 0.0;
  double entropy_b = 0.0;
  double entropy_ab = 0.0;
  double mutual_information = 0.0;
  double classical_correlation = 0.0;
  double discord = 0.0;
  OptimizationResult optimization;
};

DiscordReport analyze_discord(const DensityMatrix& rho, const OptimizerConfig& cfg = {});

/// Kronecker product of two 2x2 states.
CMatrix kron(const CMatrix& a, const CMatrix& b);

}  // namespace qdnn
