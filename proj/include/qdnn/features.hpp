#pragma once

// Power-series feature map: all monomials of an n-vector up to total
// degree L, in graded lexicographic order (ascending total degree, ties by
// ascending exponent tuple). The first feature is the constant 1.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qdnn/dense.hpp"

namespace qdnn {

using MultiIndex = std::vector<int>;

/// binomial(n + L, n). Throws Overflow past 64-bit range.
std::uint64_t feature_dim(int n, int degree);

std::vector<MultiIndex> enumerate_multi_indices(int n, int degree);

/// Precomputed evaluation plan for one (n, L). Monomial j is its parent
/// monomial times one variable, where the parent drops the last factor of
/// the left-to-right product x1^a1 x2^a2 ... xn^an, so each feature is
/// bitwise equal to that product.
class FeatureBasis {
 public:
  FeatureBasis(int n, int degree);

  int n() const noexcept { return n_; }
  int degree() const noexcept { return degree_; }
  std::size_t dim() const noexcept { return indices_.size(); }
  const std::vector<MultiIndex>& indices() const noexcept { return indices_; }

  /// Writes dim() values into out.
  void evaluate(std::span<const double> x, std::span<double> out) const;
  std::vector<double> operator()(std::span<const double> x) const;

  /// One row per sample.
  Matrix evaluate_rows(std::span<const std::vector<double>> samples) const;

 private:
  int n_;
  int degree_;
  std::vector<MultiIndex> indices_;
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> variable_;
};

std::vector<double> feature_map(std::span<const double> x, int degree);

/// Direct left-to-right product of x_i^{a_i}, 0^0 = 1.
double monomial(std::span<const double> x, const MultiIndex& a);

}  // namespace qdnn
