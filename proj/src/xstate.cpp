#include "qdnn/xstate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qdnn/error.hpp"

namespace qdnn {
namespace {

constexpr double kThetaSlack = 1e-12;

// Weighted Bloch entropy of one outcome with probability p whose
// conditional qubit state has diagonal (u, v) and no coherence.
double diagonal_branch(double u, double v) {
  const double p = u + v;
  if (p <= kNullProbability) return 0.0;
  return p * bloch_entropy(std::min(1.0, std::abs(u - v) / p));
}

}  // namespace

void check_xstate_constraints(const XStateParams& p) {
  std::ostringstream os;
  os.precision(17);
  for (int i = 0; i < 7; ++i) {
    if (!std::isfinite(p.x[i])) {
      os << "x" << i + 1 << " is not finite";
      throw Error(Errc::ConstraintViolated, os.str());
    }
  }
  for (int i = 0; i < 3; ++i) {
    if (p.x[i] < 0.0) {
      os << "x" << i + 1 << " >= 0 fails: x" << i + 1 << " = " << p.x[i];
      throw Error(Errc::ConstraintViolated, os.str());
    }
  }
  if (p.x[0] + p.x[1] + p.x[2] > 1.0 + kTraceTol) {
    os << "x1 + x2 + x3 <= 1 fails: sum = " << p.x[0] + p.x[1] + p.x[2];
    throw Error(Errc::ConstraintViolated, os.str());
  }
  const double r44 = std::max(0.0, p.rho44());
  if (std::norm(p.rho14()) > p.rho11() * r44 + kXStateSlack) {
    os << "|rho14|^2 <= rho11 rho44 fails: " << std::norm(p.rho14()) << " > " << p.rho11() * r44;
    throw Error(Errc::ConstraintViolated, os.str());
  }
  if (std::norm(p.rho23()) > p.rho22() * p.rho33() + kXStateSlack) {
    os << "|rho23|^2 <= rho22 rho33 fails: " << std::norm(p.rho23()) << " > "
       << p.rho22() * p.rho33();
    throw Error(Errc::ConstraintViolated, os.str());
  }
}

CMatrix4 xstate_matrix(const XStateParams& p) {
  CMatrix4 m = CMatrix4::Zero();
  m(0, 0) = p.rho11();
  m(1, 1) = p.rho22();
  m(2, 2) = p.rho33();
  m(3, 3) = p.rho44();
  m(0, 3) = p.rho14();
  m(3, 0) = std::conj(p.rho14());
  m(1, 2) = p.rho23();
  m(2, 1) = std::conj(p.rho23());
  return m;
}

DensityMatrix xstate_from_params(const XStateParams& p) {
  check_xstate_constraints(p);
  return validate_density_matrix(xstate_matrix(p));
}

XStateParams xstate_params_from_matrix(const CMatrix& m, double tol) {
  if (m.rows() != 4 || m.cols() != 4)
    throw Error(Errc::FamilyMismatch, "X-state parameters need a 4x4 matrix");
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const bool on_x = i == j || i + j == 3;
      if (!on_x && std::abs(m(i, j)) > tol)
        throw Error(Errc::FamilyMismatch, "matrix has entries outside the X pattern");
    }
  XStateParams p;
  p.x = {m(0, 0).real(), m(1, 1).real(), m(2, 2).real(), m(0, 3).real(),
         m(0, 3).imag(), m(1, 2).real(), m(1, 2).imag()};
  return p;
}

double CandidateSet::min() const noexcept { return std::min({s_z, s_x, s_y}); }

double bloch_entropy(double t) noexcept {
  const double lo = 0.5 * (1.0 - t);
  const double hi = 0.5 * (1.0 + t);
  double s = 0.0;
  if (lo > 0.0) s -= lo * std::log2(lo);
  if (hi > 0.0) s -= hi * std::log2(hi);
  return s;
}

CandidateSet pauli_candidates(const XStateParams& p) {
  const double r11 = p.rho11(), r22 = p.rho22(), r33 = p.rho33(), r44 = p.rho44();
  const Complex r14 = p.rho14(), r23 = p.rho23();

  CandidateSet out;
  // z: outcome b=0 keeps |00>,|10> (rho11, rho33); b=1 keeps rho22, rho44.
  // The conditional states are diagonal.
  out.s_z = diagonal_branch(r11, r33) + diagonal_branch(r22, r44);
  out.axis_z = BlochDirection::z();

  // Equator at azimuth phi: both outcomes have probability 1/2 and the
  // conditional state of A has Bloch radius
  //   sqrt(d^2 + 4 |rho14 e^{i phi} + rho23 e^{-i phi}|^2),
  // d = rho11 + rho22 - rho33 - rho44. The coherence term is largest when
  // the two phases align and smallest a quarter turn away.
  const double d = r11 + r22 - r33 - r44;
  const double a14 = std::abs(r14), a23 = std::abs(r23);
  const double aligned = a14 + a23;
  const double opposed = std::abs(a14 - a23);
  out.s_x = bloch_entropy(std::min(1.0, std::sqrt(d * d + 4.0 * aligned * aligned)));
  out.s_y = bloch_entropy(std::min(1.0, std::sqrt(d * d + 4.0 * opposed * opposed)));

  const double phi = 0.5 * (std::arg(r23) - std::arg(r14));
  out.axis_x = BlochDirection::canonical(std::numbers::pi / 2, phi);
  out.axis_y = BlochDirection::canonical(std::numbers::pi / 2, phi + std::numbers::pi / 2);
  return out;
}

double analytic_c(const XStateParams& p) { return pauli_candidates(p).min(); }

CMatrix4 example_state(double a) {
  CMatrix4 m = CMatrix4::Zero();
  m(0, 0) = 0.35 - 0.35 * a;
  m(1, 1) = 0.25 + 0.25 * a;
  m(2, 2) = 0.2 + 0.5 * a;
  m(3, 3) = 0.2 - 0.2 * a;
  m(0, 3) = m(3, 0) = -0.2 + 0.2 * a;
  m(1, 2) = m(2, 1) = -0.15 + 0.6 * a;
  return m;
}

CMatrix4 normalized_example_state(double a) {
  const CMatrix4 m = example_state(a);
  return m / m.trace().real();
}

bool example_state_valid(double a) {
  const CMatrix4 m = example_state(a);
  const double tr = m.trace().real();
  if (!(tr > 0.0)) return false;
  try {
    validate_density_matrix(m / tr);
    return true;
  } catch (const Error&) {
    return false;
  }
}

Interval example_valid_interval(double tol) {
  auto edge = [&](double inside, double outside) {
    while (std::abs(outside - inside) > tol) {
      const double mid = 0.5 * (inside + outside);
      (example_state_valid(mid) ? inside : outside) = mid;
    }
    return inside;
  };
  // Step outward from the valid point a = 0 until validity fails.
  auto bracket = [&](double dir) {
    double inside = 0.0;
    for (double step = 1e-3;; step *= 2.0) {
      const double probe = dir * step;
      if (!example_state_valid(probe)) return edge(inside, probe);
      inside = probe;
      if (step > 1e3) return probe;
    }
  };
  return {bracket(-1.0), bracket(1.0)};
}

ExampleSolution example_analytic_c(double a) {
  ExampleSolution s;
  s.a = a;
  const double w0 = 0.55 + 0.15 * a;
  const double w1 = 0.45 - 0.15 * a;
  s.theta[0] = std::sqrt((0.15 - 0.85 * a) * (0.15 - 0.85 * a) / (w0 * w0));
  s.theta[1] = std::sqrt((0.05 + 0.25 * a) * (0.05 + 0.25 * a) / (w1 * w1));
  s.theta[2] = std::sqrt((0.1325 - 0.62 * a + 0.73 * a * a) / 0.25);
  s.theta[3] = std::sqrt((0.0125 - 0.02 * a + 0.25 * a * a) / 0.25);
  for (int j = 0; j < 4; ++j) {
    if (!(s.theta[j] <= 1.0 + kThetaSlack)) {
      std::ostringstream os;
      os.precision(17);
      os << "theta" << j + 1 << " = " << s.theta[j] << " exceeds 1 at a = " << a;
      throw Error(Errc::DomainError, os.str());
    }
    s.theta[j] = std::min(s.theta[j], 1.0);
  }
  s.curve_z = w0 * bloch_entropy(s.theta[0]) + w1 * bloch_entropy(s.theta[1]);
  s.curve_theta3 = bloch_entropy(s.theta[2]);
  s.curve_theta4 = bloch_entropy(s.theta[3]);
  s.c = std::min({s.curve_z, s.curve_theta3, s.curve_theta4});
  return s;
}

}  // namespace qdnn
