#include "qdnn/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qdnn/error.hpp"
#include "qdnn/kernels.hpp"
#include "qdnn/rng.hpp"

namespace qdnn {

std::string_view model_kind_name(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::NN: return "nn";
    case ModelKind::PKNN: return "pknn";
    case ModelKind::DBNN: return "dbnn";
  }
  return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept {
  for (ModelKind k : {ModelKind::NN, ModelKind::PKNN, ModelKind::DBNN})
    if (model_kind_name(k) == name) return k;
  return std::nullopt;
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double sigmoid_derivative(double z) noexcept {
  const double s = sigmoid(z);
  return s * (1.0 - s);
}

double entropy_activation(double z) noexcept { return z > 0.0 ? z * std::log2(z) : 0.0; }

double entropy_activation_derivative(double z) noexcept {
  return z > kEntropyKink ? std::log2(z) + 1.0 / std::numbers::ln2 : 0.0;
}

ModelWeights::ModelWeights(ModelKind kind, std::size_t hidden, std::size_t features)
    : kind_(kind),
      hidden_(hidden),
      input_((kind == ModelKind::DBNN ? 2 : 1) * hidden, features),
      output_(hidden, 0.0) {}

void ModelWeights::add_scaled(const ModelWeights& other, double alpha) {
  if (other.kind_ != kind_ || other.hidden_ != hidden_ || other.features() != features())
    throw Error(Errc::ShapeMismatch, "weight shapes differ");
  // Padding columns are zero in both, so the full backing store can be used.
  kernels::axpy(input_.storage().size(), alpha, other.input_.data(), input_.data());
  kernels::axpy(output_.size(), alpha, other.output_.data(), output_.data());
}

bool ModelWeights::all_finite() const noexcept {
  for (double v : input_.storage())
    if (!std::isfinite(v)) return false;
  for (double v : output_)
    if (!std::isfinite(v)) return false;
  return true;
}

ModelWeights init_weights(ModelKind kind, std::size_t hidden, std::size_t features,
                          std::uint64_t seed) {
  if (hidden < 1 || features < 1)
    throw Error(Errc::ConfigInvalid, "hidden width and feature dimension must be >= 1");
  ModelWeights w(kind, hidden, features);
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(features));
  const double out_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto draw = [](std::uint64_t stream, std::uint64_t index, double bound) {
    return bound * (2.0 * CounterRng::unit_at(stream, index) - 1.0);
  };
  const std::uint64_t s1 = derive_seed(seed, 1), s2 = derive_seed(seed, 2),
                      sc = derive_seed(seed, 3);
  for (std::size_t f = 0; f < hidden; ++f)
    for (std::size_t d = 0; d < features; ++d) w.w1(f, d) = draw(s1, f * features + d, in_bound);
  for (std::size_t f = 0; f < hidden; ++f) w.w2()[f] = draw(s2, f, out_bound);
  if (w.has_condition())
    for (std::size_t f = 0; f < hidden; ++f)
      for (std::size_t d = 0; d < features; ++d)
        w.wcond(f, d) = draw(sc, f * features + d, in_bound);
  return w;
}

FeatureBatch::FeatureBatch(Matrix rows) : rows_(std::move(rows)), columns_(rows_.transposed()) {}

namespace {

// h = E(z) and dh = E'(z) from one logarithm.
inline void entropy(double z, double& h, double& dh) {
  if (z > 0.0) {
    const double l = std::log2(z);
    h = z * l;
    dh = z > kEntropyKink ? l + 1.0 / std::numbers::ln2 : 0.0;
  } else {
    h = 0.0;
    dh = 0.0;
  }
}

void fit(Matrix& x, std::size_t r, std::size_t c) {
  if (x.rows() != r || x.cols() != c) x = Matrix(r, c);
}

}  // namespace

void forward(const ModelWeights& w, const Matrix& features, ForwardTrace& t) {
  if (features.cols() != w.features())
    throw Error(Errc::ShapeMismatch, "feature dimension " + std::to_string(features.cols()) +
                                         " does not match model dimension " +
                                         std::to_string(w.features()));
  const std::size_t m = features.rows();
  const std::size_t hidden = w.hidden();
  const auto w2 = w.w2();
  transpose_into(w.input(), t.weights_t);
  multiply(features, t.weights_t, t.z);
  fit(t.h, m, hidden);
  t.prediction.assign(m, 0.0);

  switch (w.kind()) {
    case ModelKind::NN:
      for (std::size_t i = 0; i < m; ++i) {
        double y = 0.0;
        for (std::size_t f = 0; f < hidden; ++f) {
          const double h = sigmoid(t.z(i, f));
          t.h(i, f) = h;
          y += w2[f] * h;
        }
        t.prediction[i] = y;
      }
      break;
    case ModelKind::PKNN:
      fit(t.dh, m, hidden);
      for (std::size_t i = 0; i < m; ++i) {
        double y = 0.0;
        for (std::size_t f = 0; f < hidden; ++f) {
          entropy(t.z(i, f), t.h(i, f), t.dh(i, f));
          y += w2[f] * t.h(i, f);
        }
        t.prediction[i] = y;
      }
      break;
    case ModelKind::DBNN:
      fit(t.dh, m, hidden);
      fit(t.hc, m, hidden);
      fit(t.yp, m, hidden);
      for (std::size_t i = 0; i < m; ++i) {
        double y = 0.0;
        for (std::size_t f = 0; f < hidden; ++f) {
          entropy(t.z(i, f), t.h(i, f), t.dh(i, f));
          const double hc = sigmoid(t.z(i, hidden + f));
          const double yp = t.h(i, f) * hc;
          t.hc(i, f) = hc;
          t.yp(i, f) = yp;
          y += w2[f] * yp;
        }
        t.prediction[i] = y;
      }
      break;
  }
}

ForwardTrace forward(const ModelWeights& w, const Matrix& features) {
  ForwardTrace t;
  forward(w, features, t);
  return t;
}

std::vector<double> predict(const ModelWeights& w, const Matrix& features) {
  return forward(w, features).prediction;
}

double quadratic_loss(std::span<const double> prediction, std::span<const double> target) {
  if (prediction.size() != target.size())
    throw Error(Errc::ShapeMismatch, "prediction and target lengths differ");
  if (prediction.empty()) throw Error(Errc::EmptyBatch, "loss of an empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double r = target[i] - prediction[i];
    sum += r * r;
  }
  return sum / static_cast<double>(prediction.size());
}

void backward(const ModelWeights& w, const FeatureBatch& batch, std::span<const double> target,
              const ForwardTrace& trace, ModelWeights& grad, BackwardWorkspace& ws) {
  const std::size_t m = batch.samples();
  const std::size_t hidden = w.hidden();
  const std::size_t inputs = w.input().rows();
  if (batch.features() != w.features() || target.size() != m || trace.prediction.size() != m ||
      trace.z.rows() != m || trace.z.cols() != inputs)
    throw Error(Errc::ShapeMismatch, "backward inputs are inconsistent with the model");
  if (m == 0) throw Error(Errc::EmptyBatch, "gradient of an empty batch");

  if (grad.kind() != w.kind() || grad.hidden() != hidden || grad.features() != w.features())
    grad = ModelWeights(w.kind(), hidden, w.features());
  const auto w2 = w.w2();
  auto g2 = grad.w2();
  std::fill(g2.begin(), g2.end(), 0.0);
  const double scale = 2.0 / static_cast<double>(m);

  // delta(i, f) = d loss / d z(i, f); the input-layer gradient is
  // delta^T X = (X^T delta)^T.
  if (ws.delta.rows() != m || ws.delta.cols() != inputs) ws.delta = Matrix(m, inputs);
  Matrix& delta = ws.delta;
  for (std::size_t i = 0; i < m; ++i) {
    const double g = scale * (trace.prediction[i] - target[i]);
    for (std::size_t f = 0; f < hidden; ++f) {
      switch (w.kind()) {
        case ModelKind::NN: {
          const double h = trace.h(i, f);
          g2[f] += g * h;
          delta(i, f) = g * w2[f] * h * (1.0 - h);
          break;
        }
        case ModelKind::PKNN:
          g2[f] += g * trace.h(i, f);
          delta(i, f) = g * w2[f] * trace.dh(i, f);
          break;
        case ModelKind::DBNN: {
          const double hc = trace.hc(i, f);
          g2[f] += g * trace.yp(i, f);
          delta(i, f) = g * w2[f] * hc * trace.dh(i, f);
          delta(i, hidden + f) = g * w2[f] * trace.h(i, f) * hc * (1.0 - hc);
          break;
        }
      }
    }
  }

  multiply(batch.columns(), delta, ws.grad_t);  // D x (F or 2F)
  Matrix& gin = grad.input();
  for (std::size_t r = 0; r < gin.rows(); ++r)
    for (std::size_t d = 0; d < gin.cols(); ++d)
      gin(r, d) = std::clamp(ws.grad_t(d, r), -kGradientClip, kGradientClip);
  for (double& v : g2) v = std::clamp(v, -kGradientClip, kGradientClip);
}

ModelWeights backward(const ModelWeights& w, const FeatureBatch& batch,
                      std::span<const double> target, const ForwardTrace& trace) {
  ModelWeights grad(w.kind(), w.hidden(), w.features());
  BackwardWorkspace ws;
  backward(w, batch, target, trace, grad, ws);
  return grad;
}

namespace {

// Elementwise part of the fused pass for one sample of one model: z holds
// the model's pre-activations, delta_t/ld its column of the transposed
// delta. Returns the prediction.
double fused_row(const ModelWeights& w, const double* z, double target, double scale,
                 std::span<double> g2, double* delta_t, std::size_t ld) {
  const std::size_t hidden = w.hidden();
  const auto w2 = w.w2();
  double y = 0.0;
  switch (w.kind()) {
    case ModelKind::NN: {
      double h[kMaxFusedHidden];
      for (std::size_t f = 0; f < hidden; ++f) {
        h[f] = sigmoid(z[f]);
        y += w2[f] * h[f];
      }
      const double g = scale * (y - target);
      for (std::size_t f = 0; f < hidden; ++f) {
        g2[f] += g * h[f];
        delta_t[f * ld] = g * w2[f] * h[f] * (1.0 - h[f]);
      }
      break;
    }
    case ModelKind::PKNN: {
      double h[kMaxFusedHidden], dh[kMaxFusedHidden];
      for (std::size_t f = 0; f < hidden; ++f) {
        entropy(z[f], h[f], dh[f]);
        y += w2[f] * h[f];
      }
      const double g = scale * (y - target);
      for (std::size_t f = 0; f < hidden; ++f) {
        g2[f] += g * h[f];
        delta_t[f * ld] = g * w2[f] * dh[f];
      }
      break;
    }
    case ModelKind::DBNN: {
      double h[kMaxFusedHidden], dh[kMaxFusedHidden], hc[kMaxFusedHidden];
      for (std::size_t f = 0; f < hidden; ++f) {
        entropy(z[f], h[f], dh[f]);
        hc[f] = sigmoid(z[hidden + f]);
        y += w2[f] * (h[f] * hc[f]);
      }
      const double g = scale * (y - target);
      for (std::size_t f = 0; f < hidden; ++f) {
        g2[f] += g * (h[f] * hc[f]);
        delta_t[f * ld] = g * w2[f] * hc[f] * dh[f];
        delta_t[(hidden + f) * ld] = g * w2[f] * h[f] * hc[f] * (1.0 - hc[f]);
      }
      break;
    }
  }
  return y;
}

}  // namespace

void loss_and_gradient(std::span<const ModelWeights* const> models, const Matrix& features,
                       std::span<const double> target, std::span<ModelWeights> grads,
                       std::span<double> losses, GradientWorkspace& ws) {
  const std::size_t m = features.rows();
  const std::size_t d = features.cols();
  const std::size_t count = models.size();
  if (count == 0 || grads.size() != count || losses.size() != count)
    throw Error(Errc::ShapeMismatch, "one gradient and one loss slot per model are needed");
  if (target.size() != m) throw Error(Errc::ShapeMismatch, "targets do not fit the features");
  if (m == 0) throw Error(Errc::EmptyBatch, "gradient of an empty batch");

  // Input layers are stacked column-wise in weights_t; model k owns columns
  // [offset[k], offset[k + 1]).
  std::vector<std::size_t> offset(count + 1, 0);
  for (std::size_t k = 0; k < count; ++k) {
    const ModelWeights& w = *models[k];
    if (w.features() != d)
      throw Error(Errc::ShapeMismatch, "features do not fit model " + std::to_string(k));
    if (w.hidden() > kMaxFusedHidden)
      throw Error(Errc::ConfigInvalid, "hidden width above " + std::to_string(kMaxFusedHidden));
    offset[k + 1] = offset[k] + w.input().rows();
    ModelWeights& g = grads[k];
    if (g.kind() != w.kind() || g.hidden() != w.hidden() || g.features() != d)
      g = ModelWeights(w.kind(), w.hidden(), d);
    std::fill(g.w2().begin(), g.w2().end(), 0.0);
  }
  const std::size_t inputs = offset[count];
  const double scale = 2.0 / static_cast<double>(m);
  const std::size_t block = std::min(kGradientBlock, m);

  fit(ws.weights_t, d, inputs);
  for (std::size_t k = 0; k < count; ++k) {
    const Matrix& in = models[k]->input();
    for (std::size_t r = 0; r < in.rows(); ++r)
      for (std::size_t c = 0; c < d; ++c) ws.weights_t(c, offset[k] + r) = in(r, c);
  }
  fit(ws.z, block, inputs);
  fit(ws.delta_t, inputs, block);
  fit(ws.grad_in, inputs, d);
  ws.prediction.assign(count * m, 0.0);

  for (std::size_t i0 = 0; i0 < m; i0 += block) {
    const std::size_t rows = std::min(block, m - i0);
    const double* x = features.data() + i0 * features.stride();
    kernels::gemm(rows, inputs, d, x, features.stride(), ws.weights_t.data(),
                  ws.weights_t.stride(), ws.z.data(), ws.z.stride());
    for (std::size_t k = 0; k < count; ++k) {
      auto g2 = grads[k].w2();
      for (std::size_t r = 0; r < rows; ++r)
        ws.prediction[k * m + i0 + r] =
            fused_row(*models[k], &ws.z(r, offset[k]), target[i0 + r], scale, g2,
                      &ws.delta_t(offset[k], r), ws.delta_t.stride());
    }
    kernels::gemm(inputs, d, rows, ws.delta_t.data(), ws.delta_t.stride(), x, features.stride(),
                  ws.grad_in.data(), ws.grad_in.stride(), i0 > 0);
  }

  for (std::size_t k = 0; k < count; ++k) {
    Matrix& gin = grads[k].input();
    for (std::size_t f = 0; f < gin.rows(); ++f)
      for (std::size_t c = 0; c < d; ++c)
        gin(f, c) = std::clamp(ws.grad_in(offset[k] + f, c), -kGradientClip, kGradientClip);
    for (double& v : grads[k].w2()) v = std::clamp(v, -kGradientClip, kGradientClip);
    losses[k] = quadratic_loss(std::span<const double>(ws.prediction).subspan(k * m, m), target);
  }
}

double loss_and_gradient(const ModelWeights& w, const Matrix& features,
                         std::span<const double> target, ModelWeights& grad,
                         GradientWorkspace& ws) {
  const ModelWeights* models[] = {&w};
  double loss = 0.0;
  loss_and_gradient(models, features, target, std::span<ModelWeights>(&grad, 1),
                    std::span<double>(&loss, 1), ws);
  ws.prediction.resize(features.rows());
  return loss;
}

bool entropy_branch_dead(const ModelWeights& w, const ForwardTrace& trace) noexcept {
  if (w.kind() == ModelKind::NN) return false;
  for (std::size_t i = 0; i < trace.z.rows(); ++i)
    for (std::size_t f = 0; f < w.hidden(); ++f)
      if (trace.z(i, f) > 0.0) return false;
  return true;
}

}  // namespace qdnn
