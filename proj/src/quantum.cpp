#include "qdnn/quantum.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "qdnn/error.hpp"
#include "qdnn/simplex.hpp"

namespace qdnn {

// Construction path for states produced by operations that preserve the
// density-matrix invariants by construction.
struct DensityMatrixAccess {
  static DensityMatrix make(CMatrix m) { return DensityMatrix(std::move(m)); }
};

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

CMatrix hermitian_part(const CMatrix& m) { return (m + m.adjoint()) * 0.5; }

double entropy_term(double lambda) { return lambda > 0.0 ? -lambda * std::log2(lambda) : 0.0; }

Eigen::Vector4d eigenvalues4(const CMatrix4& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix4> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

CMatrix2 projector(const Eigen::Vector3d& n, double sign) {
  CMatrix2 p;
  p(0, 0) = Complex(0.5 * (1.0 + sign * n.z()), 0.0);
  p(1, 1) = Complex(0.5 * (1.0 - sign * n.z()), 0.0);
  p(0, 1) = 0.5 * sign * Complex(n.x(), -n.y());
  p(1, 0) = 0.5 * sign * Complex(n.x(), n.y());
  return p;
}

struct RawOutcome {
  double probability;
  CMatrix4 state;  // normalized, valid only above kNullProbability
};

// (I (x) P) rho (I (x) P) / p with p = tr((I (x) P) rho). With the 2a+b
// index layout I (x) P is block-diagonal, so each 2x2 block (a, a') of rho
// maps to P rho_{aa'} P.
RawOutcome measure_outcome(const CMatrix4& rho, const CMatrix2& p) {
  RawOutcome out{};
  double prob = 0.0;
  for (int a = 0; a < 2; ++a) prob += (p * rho.block<2, 2>(2 * a, 2 * a)).trace().real();
  out.probability = std::max(prob, 0.0);
  if (out.probability <= kNullProbability) {
    out.state.setZero();
    return out;
  }
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      out.state.block<2, 2>(2 * a, 2 * b) = p * rho.block<2, 2>(2 * a, 2 * b) * p;
  out.state /= out.probability;
  out.state = ((out.state + out.state.adjoint()) * 0.5).eval();
  return out;
}

double conditional_entropy4(const CMatrix4& rho, const Eigen::Vector3d& n) {
  double total = 0.0;
  for (double sign : {1.0, -1.0}) {
    const RawOutcome o = measure_outcome(rho, projector(n, sign));
    if (o.probability <= kNullProbability) continue;
    const Eigen::Vector4d ev = eigenvalues4(o.state);
    total += o.probability * entropy_of_spectrum(ev.data(), 4);
  }
  return total;
}

}  // namespace

CMatrix4 DensityMatrix::matrix4() const {
  if (dim() != 4) throw Error(Errc::ShapeMismatch, "expected a two-qubit (4x4) state");
  return m_;
}

Eigen::Vector3d BlochDirection::unit_vector() const noexcept {
  const double s = std::sin(theta);
  return {s * std::cos(phi), s * std::sin(phi), std::cos(theta)};
}

BlochDirection BlochDirection::antipode() const noexcept {
  return canonical(kPi - theta, phi + kPi);
}

BlochDirection BlochDirection::canonical(double theta, double phi) noexcept {
  theta = std::fmod(theta, kTwoPi);
  if (theta < 0.0) theta += kTwoPi;
  if (theta > kPi) {
    theta = kTwoPi - theta;
    phi += kPi;
  }
  phi = std::fmod(phi, kTwoPi);
  if (phi < 0.0) phi += kTwoPi;
  if (phi >= kTwoPi) phi = 0.0;
  return {theta, phi};
}

BlochDirection BlochDirection::from_vector(const Eigen::Vector3d& n) noexcept {
  const Eigen::Vector3d u = n.normalized();
  return canonical(std::acos(std::clamp(u.z(), -1.0, 1.0)), std::atan2(u.y(), u.x()));
}

BlochDirection BlochDirection::x() noexcept { return {kPi / 2, 0.0}; }
BlochDirection BlochDirection::y() noexcept { return {kPi / 2, kPi / 2}; }

void OptimizerConfig::validate() const {
  if (theta_points < 4 || phi_points < 4)
    throw Error(Errc::ConfigInvalid, "coarse grid needs at least 4 points per axis");
  if (starts < 1) throw Error(Errc::ConfigInvalid, "at least one refinement start is required");
  if (!(tol > 0.0)) throw Error(Errc::ConfigInvalid, "tolerance must be positive");
  if (max_iterations < 1) throw Error(Errc::ConfigInvalid, "max_iterations must be positive");
}

Eigen::VectorXd hermitian_eigenvalues(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

DensityMatrix validate_density_matrix(const CMatrix& m) {
  if (m.rows() != m.cols() || (m.rows() != 2 && m.rows() != 4))
    throw Error(Errc::ShapeMismatch, "density matrix must be 2x2 or 4x4");
  if (!m.allFinite()) throw Error(Errc::NotHermitian, "matrix has non-finite entries");

  const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (asym > kHermitianTol) {
    std::ostringstream os;
    os << "max |m_ij - conj(m_ji)| = " << asym;
    throw Error(Errc::NotHermitian, os.str());
  }
  CMatrix h = hermitian_part(m);

  const double tr = h.trace().real();
  if (std::abs(tr - 1.0) > kTraceTol) {
    std::ostringstream os;
    os.precision(17);
    os << "trace = " << tr;
    throw Error(Errc::TraceNotOne, os.str());
  }

  const Eigen::VectorXd ev = hermitian_eigenvalues(h);
  if (ev.minCoeff() < -kPsdTol) {
    std::ostringstream os;
    os.precision(17);
    os << "eigenvalue " << ev.minCoeff() << " below -" << kPsdTol;
    throw Error(Errc::NotPositive, os.str());
  }
  return DensityMatrix(std::move(h));
}

double entropy_of_spectrum(const double* eigenvalues, std::size_t size) {
  double s = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double lambda = eigenvalues[i];
    if (lambda < -kPsdTol) {
      std::ostringstream os;
      os.precision(17);
      os << "eigenvalue " << lambda << " below -" << kPsdTol;
      throw Error(Errc::NotPositive, os.str());
    }
    s += entropy_term(lambda);
  }
  return std::clamp(s, 0.0, std::log2(static_cast<double>(size)));
}

double von_neumann_entropy(const DensityMatrix& rho) {
  const Eigen::VectorXd ev = hermitian_eigenvalues(rho.matrix());
  return entropy_of_spectrum(ev.data(), static_cast<std::size_t>(ev.size()));
}

DensityMatrix partial_trace(const DensityMatrix& rho, Subsystem keep) {
  if (rho.dim() != 4) throw Error(Errc::ShapeMismatch, "partial trace needs a two-qubit state");
  const CMatrix& m = rho.matrix();
  CMatrix out = CMatrix::Zero(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        out(i, j) += keep == Subsystem::A ? m(2 * i + k, 2 * j + k) : m(2 * k + i, 2 * k + j);
  return DensityMatrixAccess::make(hermitian_part(out));
}

ProjectorPair measurement_projectors(const BlochDirection& dir) {
  const Eigen::Vector3d n = dir.unit_vector();
  return {projector(n, 1.0), projector(n, -1.0)};
}

ConditionalEnsemble measure_B(const DensityMatrix& rho, const BlochDirection& dir) {
  const CMatrix4 m = rho.matrix4();
  const ProjectorPair proj = measurement_projectors(dir);
  ConditionalEnsemble ens;
  for (int k = 0; k < 2; ++k) {
    RawOutcome o = measure_outcome(m, k == 0 ? proj.plus : proj.minus);
    ens.outcomes[k].probability = o.probability;
    if (o.probability > kNullProbability)
      ens.outcomes[k].state = DensityMatrixAccess::make(CMatrix(o.state));
  }
  return ens;
}

double conditional_entropy(const DensityMatrix& rho, const BlochDirection& dir) {
  return conditional_entropy4(rho.matrix4(), dir.unit_vector());
}

OptimizationResult minimize_conditional_entropy(const DensityMatrix& rho,
                                                const OptimizerConfig& cfg) {
  cfg.validate();
  const CMatrix4 m = rho.matrix4();

  OptimizationResult result;
  auto objective = [&](double theta, double phi) {
    ++result.evaluations;
    const double s = std::sin(theta);
    return conditional_entropy4(m, {s * std::cos(phi), s * std::sin(phi), std::cos(theta)});
  };

  struct GridPoint {
    double value, theta, phi;
  };
  std::vector<GridPoint> grid;
  grid.reserve(static_cast<std::size_t>(cfg.theta_points) * cfg.phi_points);
  const double dtheta = (kPi / 2) / (cfg.theta_points - 1);
  const double dphi = kTwoPi / cfg.phi_points;
  for (int i = 0; i < cfg.theta_points; ++i) {
    const double theta = dtheta * i;
    // The pole is a single direction whatever phi is.
    const int nphi = i == 0 ? 1 : cfg.phi_points;
    for (int j = 0; j < nphi; ++j) {
      const double phi = dphi * j;
      grid.push_back({objective(theta, phi), theta, phi});
    }
  }

  const std::size_t starts = std::min<std::size_t>(cfg.starts, grid.size());
  std::partial_sort(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(starts), grid.end(),
                    [](const GridPoint& a, const GridPoint& b) {
                      if (a.value != b.value) return a.value < b.value;
                      if (a.theta != b.theta) return a.theta < b.theta;
                      return a.phi < b.phi;
                    });

  double best = grid.front().value;
  double best_theta = grid.front().theta;
  double best_phi = grid.front().phi;

  SimplexOptions opt;
  opt.value_tol = cfg.tol;
  opt.max_iterations = cfg.max_iterations;
  for (std::size_t s = 0; s < starts; ++s) {
    auto f = [&](const std::array<double, 2>& p) { return objective(p[0], p[1]); };
    const auto refined = nelder_mead<2>(f, {grid[s].theta, grid[s].phi},
                                        {0.5 * dtheta, 0.5 * dphi}, opt);
    if (refined.value < best) {
      best = refined.value;
      best_theta = refined.x[0];
      best_phi = refined.x[1];
    }
  }

  result.c_min = std::max(best, 0.0);
  result.argmin = BlochDirection::canonical(best_theta, best_phi);
  return result;
}

double mutual_information(const DensityMatrix& rho) {
  const double i = von_neumann_entropy(partial_trace(rho, Subsystem::A)) +
                   von_neumann_entropy(partial_trace(rho, Subsystem::B)) -
                   von_neumann_entropy(rho);
  return std::clamp(i, 0.0, 2.0);
}

namespace {

constexpr double kClampTol = 1e-9;

double clamp_small_negative(double v) { return (v < 0.0 && v >= -kClampTol) ? 0.0 : v; }

}  // namespace

DiscordReport analyze_discord(const DensityMatrix& rho, const OptimizerConfig& cfg) {
  DiscordReport r;
  r.entropy_a = von_neumann_entropy(partial_trace(rho, Subsystem::A));
  r.entropy_b = von_neumann_entropy(partial_trace(rho, Subsystem::B));
  r.entropy_ab = von_neumann_entropy(rho);
  r.mutual_information = std::clamp(r.entropy_a + r.entropy_b - r.entropy_ab, 0.0, 2.0);
  r.optimization = minimize_conditional_entropy(rho, cfg);
  r.classical_correlation = clamp_small_negative(r.entropy_a - r.optimization.c_min);
  r.discord = clamp_small_negative(r.entropy_b - r.entropy_ab + r.optimization.c_min);
  return r;
}

double classical_correlation(const DensityMatrix& rho, const OptimizerConfig& cfg) {
  const double sa = von_neumann_entropy(partial_trace(rho, Subsystem::A));
  return clamp_small_negative(sa - minimize_conditional_entropy(rho, cfg).c_min);
}

double quantum_discord(const DensityMatrix& rho, const OptimizerConfig& cfg) {
  const double sb = von_neumann_entropy(partial_trace(rho, Subsystem::B));
  const double sab = von_neumann_entropy(rho);
  return clamp_small_negative(sb - sab + minimize_conditional_entropy(rho, cfg).c_min);
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace qdnn
