#pragma once

// Hand-rolled generators shared by the tests.

#include <Eigen/QR>
#include <cmath>
#include <numbers>

#include <algorithm>
#include <vector>

#include "qdnn/datagen.hpp"
#include "qdnn/features.hpp"
#include "qdnn/models.hpp"
#include "qdnn/quantum.hpp"
#include "qdnn/rng.hpp"

namespace qdnn::test {

inline Complex random_complex(CounterRng& rng) {
  return {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
}

/// G G^dagger / tr for a random complex G; full rank with probability 1.
inline CMatrix random_density(CounterRng& rng, int dim) {
  CMatrix g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = random_complex(rng);
  CMatrix m = g * g.adjoint();
  m /= m.trace().real();
  return (m + m.adjoint()) * 0.5;
}

/// Rank-one projector onto a random vector.
inline CMatrix random_pure(CounterRng& rng, int dim) {
  Eigen::VectorXcd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = random_complex(rng);
  v.normalize();
  return v * v.adjoint();
}

inline CMatrix random_unitary(CounterRng& rng, int dim) {
  CMatrix g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = random_complex(rng);
  return Eigen::HouseholderQR<CMatrix>(g).householderQ();
}

inline BlochDirection random_direction(CounterRng& rng) {
  Eigen::Vector3d n;
  do {
    n = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  } while (n.norm() < 1e-3 || n.norm() > 1.0);
  return BlochDirection::from_vector(n);
}

inline double shannon(std::initializer_list<double> p) {
  double s = 0.0;
  for (double v : p)
    if (v > 0.0) s -= v * std::log2(v);
  return s;
}

/// Discord of the Werner state p |Psi-><Psi-| + (1 - p) I/4.
inline double werner_discord(double p) {
  auto t = [](double x) { return x > 0.0 ? x * std::log2(x) : 0.0; };
  return 0.25 * t(1.0 - p) - 0.5 * t(1.0 + p) + 0.25 * t(1.0 + 3.0 * p);
}

inline CMatrix werner_state(double p) {
  CMatrix psi = CMatrix::Zero(4, 4);
  psi(1, 1) = psi(2, 2) = 0.5;
  psi(1, 2) = psi(2, 1) = -0.5;
  return p * psi + (1.0 - p) * CMatrix::Identity(4, 4) / 4.0;
}

/// A small regression problem whose entropy-branch pre-activations all
/// stay at least `margin` away from zero, so central differences never
/// straddle the kink of E.
struct GradientProblem {
  ModelWeights weights;
  Matrix features;
  std::vector<double> targets;
};

inline GradientProblem gradient_problem(ModelKind kind, std::uint64_t seed,
                                        double margin = 1e-3) {
  constexpr std::size_t kSamples = 24, kHidden = 16;
  CounterRng rng(derive_seed(seed, 77));
  std::vector<std::vector<double>> xs;
  GradientProblem p;
  for (std::size_t i = 0; i < kSamples; ++i) {
    const auto s = sample_xstate(rng);
    xs.emplace_back(s.x.begin(), s.x.end());
    p.targets.push_back(rng.uniform(0.0, 1.0));
  }
  p.features = FeatureBasis(7, 2).evaluate_rows(xs);
  for (std::uint64_t attempt = 0;; ++attempt) {
    p.weights = init_weights(kind, kHidden, p.features.cols(), derive_seed(seed, attempt));
    if (kind == ModelKind::NN) return p;
    const auto t = forward(p.weights, p.features);
    bool clear = true;
    for (std::size_t i = 0; i < t.z.rows() && clear; ++i)
      for (std::size_t f = 0; f < kHidden; ++f)
        if (std::abs(t.z(i, f)) <= margin) clear = false;
    if (clear && !entropy_branch_dead(p.weights, t)) return p;
  }
}

struct GradientCheck {
  double worst_relative = 0.0;
  std::size_t coordinates = 0;
};

/// Quadratic loss from an independent extended-precision forward pass, so
/// that finite differences are not swamped by rounding in the loss.
inline long double reference_loss(const ModelWeights& w, const Matrix& x,
                                  const std::vector<double>& y) {
  const std::size_t hidden = w.hidden(), d = w.features();
  auto sig = [](long double z) { return 1.0L / (1.0L + std::exp(-z)); };
  auto ent = [](long double z) { return z > 0.0L ? z * std::log2(z) : 0.0L; };
  long double sum = 0.0L;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    long double out = 0.0L;
    for (std::size_t f = 0; f < hidden; ++f) {
      long double z1 = 0.0L, zc = 0.0L;
      for (std::size_t c = 0; c < d; ++c) {
        z1 += static_cast<long double>(w.w1(f, c)) * x(i, c);
        if (w.has_condition()) zc += static_cast<long double>(w.wcond(f, c)) * x(i, c);
      }
      long double h = 0.0L;
      switch (w.kind()) {
        case ModelKind::NN: h = sig(z1); break;
        case ModelKind::PKNN: h = ent(z1); break;
        case ModelKind::DBNN: h = ent(z1) * sig(zc); break;
      }
      out += static_cast<long double>(w.w2()[f]) * h;
    }
    const long double r = out - y[i];
    sum += r * r;
  }
  return sum / static_cast<long double>(x.rows());
}

/// Compares `grad` with central differences of the loss at 20 random
/// coordinates of each weight matrix. Relative error is
/// |g - fd| / max(|g|, |fd|, 1e-8).
inline GradientCheck check_gradient(const GradientProblem& p, const ModelWeights& grad,
                                    std::uint64_t seed, double step = 1e-6) {
  GradientCheck out;
  CounterRng rng(derive_seed(seed, 91));
  ModelWeights w = p.weights;
  auto probe = [&](double& slot, double analytic) {
    const double keep = slot;
    const double up_w = keep + step, down_w = keep - step;
    slot = up_w;
    const long double up = reference_loss(w, p.features, p.targets);
    slot = down_w;
    const long double down = reference_loss(w, p.features, p.targets);
    slot = keep;
    const double fd = static_cast<double>((up - down) / (static_cast<long double>(up_w) - down_w));
    const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-8});
    out.worst_relative = std::max(out.worst_relative, std::abs(analytic - fd) / scale);
    ++out.coordinates;
  };
  const std::size_t hidden = w.hidden(), d = w.features();
  auto pick = [&](std::size_t n) {
    return static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
  };
  for (int k = 0; k < 20; ++k) {
    const std::size_t f = pick(hidden), c = pick(d);
    probe(w.w1(f, c), grad.w1(f, c));
  }
  for (int k = 0; k < 20; ++k) {
    const std::size_t f = pick(hidden);
    probe(w.w2()[f], grad.w2()[f]);
  }
  if (w.has_condition())
    for (int k = 0; k < 20; ++k) {
      const std::size_t f = pick(hidden), c = pick(d);
      probe(w.wcond(f, c), grad.wcond(f, c));
    }
  return out;
}

}  // namespace qdnn::test
