#pragma once

// One-hidden-layer regressors on power-series features.
//
//   NN   : y = W2 . sigmoid(W1 x)
//   PKNN : y = W2 . E(W1 x),                 E(z) = z log2 z for z > 0, else 0
//   DBNN : y = W2 . (E(W1 x) * sigmoid(Wc x))  (elementwise product)
//
// There are no bias parameters; the constant feature supplies the
// first-layer offset.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qdnn/dense.hpp"

namespace qdnn {

enum class ModelKind { NN, PKNN, DBNN };

std::string_view model_kind_name(ModelKind kind) noexcept;  // "nn", "pknn", "dbnn"
std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept;

inline constexpr std::size_t kDefaultHidden = 16;
/// E'(z) is taken as 0 for z <= kEntropyKink.
inline constexpr double kEntropyKink = 1e-12;
/// Per-entry bound applied to every weight gradient.
inline constexpr double kGradientClip = 1e3;

double sigmoid(double z) noexcept;
double sigmoid_derivative(double z) noexcept;
double entropy_activation(double z) noexcept;
double entropy_activation_derivative(double z) noexcept;

/// Weights of any of the three models. The input layer stacks W1 (rows
/// [0, F)) over Wcond (rows [F, 2F), DBNN only) so one kernel call computes
/// both branches.
class ModelWeights {
 public:
  ModelWeights() = default;
  ModelWeights(ModelKind kind, std::size_t hidden, std::size_t features);

  ModelKind kind() const noexcept { return kind_; }
  std::size_t hidden() const noexcept { return hidden_; }
  std::size_t features() const noexcept { return input_.cols(); }
  bool has_condition() const noexcept { return kind_ == ModelKind::DBNN; }

  double& w1(std::size_t f, std::size_t d) noexcept { return input_(f, d); }
  double w1(std::size_t f, std::size_t d) const noexcept { return input_(f, d); }
  double& wcond(std::size_t f, std::size_t d) noexcept { return input_(hidden_ + f, d); }
  double wcond(std::size_t f, std::size_t d) const noexcept { return input_(hidden_ + f, d); }
  std::span<double> w2() noexcept { return output_; }
  std::span<const double> w2() const noexcept { return output_; }

  /// Stacked input layer, (F or 2F) x D.
  Matrix& input() noexcept { return input_; }
  const Matrix& input() const noexcept { return input_; }

  /// w += alpha * other, over every parameter.
  void add_scaled(const ModelWeights& other, double alpha);
  bool all_finite() const noexcept;

  friend bool operator==(const ModelWeights& a, const ModelWeights& b) noexcept {
    return a.kind_ == b.kind_ && a.hidden_ == b.hidden_ && a.input_ == b.input_ &&
           a.output_ == b.output_;
  }

 private:
  ModelKind kind_ = ModelKind::NN;
  std::size_t hidden_ = 0;
  Matrix input_;
  std::vector<double> output_;
};

/// W1 and Wcond uniform in +-1/sqrt(D), W2 uniform in +-1/sqrt(F), from a
/// counter-based generator so that equal seeds give identical weights.
ModelWeights init_weights(ModelKind kind, std::size_t hidden, std::size_t features,
                          std::uint64_t seed);

/// Feature rows together with their transpose, which the input-layer
/// gradient streams over.
class FeatureBatch {
 public:
  FeatureBatch() = default;
  explicit FeatureBatch(Matrix rows);

  const Matrix& rows() const noexcept { return rows_; }
  const Matrix& columns() const noexcept { return columns_; }
  std::size_t samples() const noexcept { return rows_.rows(); }
  std::size_t features() const noexcept { return rows_.cols(); }

 private:
  Matrix rows_;
  Matrix columns_;
};

struct ForwardTrace {
  Matrix z;       // M x (F or 2F): pre-activations, [z1 | zc]
  Matrix h;       // M x F: sigmoid(z1) for NN, E(z1) otherwise
  Matrix dh;      // M x F: E'(z1), PKNN and DBNN
  Matrix hc;      // M x F: sigmoid(zc), DBNN only
  Matrix yp;      // M x F: h * hc, DBNN only
  std::vector<double> prediction;
  Matrix weights_t;  // scratch: transposed input layer
};

ForwardTrace forward(const ModelWeights& w, const Matrix& features);
/// Same as above, reusing the storage already held by `t`.
void forward(const ModelWeights& w, const Matrix& features, ForwardTrace& t);

std::vector<double> predict(const ModelWeights& w, const Matrix& features);

/// Mean of squared residuals. Throws EmptyBatch / ShapeMismatch.
double quadratic_loss(std::span<const double> prediction, std::span<const double> target);

/// Gradient of quadratic_loss with respect to every weight, same layout as w.
ModelWeights backward(const ModelWeights& w, const FeatureBatch& batch,
                      std::span<const double> target, const ForwardTrace& trace);

struct BackwardWorkspace {
  Matrix delta;   // M x (F or 2F)
  Matrix grad_t;  // D x (F or 2F)
};

/// Allocation-free form for training loops; `grad` is reshaped if needed.
void backward(const ModelWeights& w, const FeatureBatch& batch, std::span<const double> target,
              const ForwardTrace& trace, ModelWeights& grad, BackwardWorkspace& ws);

/// Row block of the fused gradient pass, sized so that a block of features
/// stays in cache between its two uses.
inline constexpr std::size_t kGradientBlock = 96;
/// Widest hidden layer the fused pass supports.
inline constexpr std::size_t kMaxFusedHidden = 256;

struct GradientWorkspace {
  std::vector<double> prediction;  // M per model, model after model
  Matrix weights_t;                // D x (sum of input rows)
  Matrix z;                        // block x (sum of input rows)
  Matrix delta_t;                  // (sum of input rows) x block
  Matrix grad_in;                  // (sum of input rows) x D, before clipping
};

/// Quadratic loss of w on (features, target) and its gradient, in a single
/// pass over blocks of feature rows. Agrees with forward() + backward() up
/// to summation order; ws.prediction holds the predictions afterwards.
double loss_and_gradient(const ModelWeights& w, const Matrix& features,
                         std::span<const double> target, ModelWeights& grad,
                         GradientWorkspace& ws);

/// Several models over the same features and targets in one pass: their
/// input layers share the feature-block GEMMs. losses[k] and grads[k] are
/// bitwise equal to what the single-model call gives for models[k].
void loss_and_gradient(std::span<const ModelWeights* const> models, const Matrix& features,
                       std::span<const double> target, std::span<ModelWeights> grads,
                       std::span<double> losses, GradientWorkspace& ws);

/// True for PKNN/DBNN when every entropy-branch pre-activation is <= 0,
/// i.e. the model output is identically zero and no gradient flows to W1.
bool entropy_branch_dead(const ModelWeights& w, const ForwardTrace& trace) noexcept;

}  // namespace qdnn
