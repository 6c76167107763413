#include "qdnn/features.hpp"

#include <limits>
#include <map>
#include <string>

#include "qdnn/error.hpp"

namespace qdnn {
namespace {

// Compositions of `total` into `n` parts in ascending lexicographic order.
void compositions(int n, int total, MultiIndex& current, int pos, std::vector<MultiIndex>& out) {
  if (pos == n - 1) {
    current[pos] = total;
    out.push_back(current);
    return;
  }
  for (int v = 0; v <= total; ++v) {
    current[pos] = v;
    compositions(n, total - v, current, pos + 1, out);
  }
}

}  // namespace

std::uint64_t feature_dim(int n, int degree) {
  if (n < 1 || degree < 1) throw Error(Errc::ConfigInvalid, "feature_dim needs n, L >= 1");
  // C(n+L, L) built incrementally; each partial product C(n+i, i) is exact.
  unsigned __int128 acc = 1;
  for (int i = 1; i <= degree; ++i) {
    acc = acc * static_cast<unsigned>(n + i) / static_cast<unsigned>(i);
    if (acc > std::numeric_limits<std::uint64_t>::max())
      throw Error(Errc::Overflow, "feature dimension exceeds 64-bit range for n=" +
                                      std::to_string(n) + ", L=" + std::to_string(degree));
  }
  return static_cast<std::uint64_t>(acc);
}

std::vector<MultiIndex> enumerate_multi_indices(int n, int degree) {
  if (n < 1 || degree < 1) throw Error(Errc::ConfigInvalid, "multi-indices need n, L >= 1");
  const std::uint64_t count = feature_dim(n, degree);
  if (count > (std::uint64_t{1} << 32))
    throw Error(Errc::Overflow, "too many monomials to enumerate");
  std::vector<MultiIndex> out;
  out.reserve(static_cast<std::size_t>(count));
  MultiIndex current(static_cast<std::size_t>(n), 0);
  for (int total = 0; total <= degree; ++total) compositions(n, total, current, 0, out);
  return out;
}

double monomial(std::span<const double> x, const MultiIndex& a) {
  double v = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int k = 0; k < a[i]; ++k) v *= x[i];
  return v;
}

FeatureBasis::FeatureBasis(int n, int degree)
    : n_(n), degree_(degree), indices_(enumerate_multi_indices(n, degree)) {
  std::map<MultiIndex, std::uint32_t> position;
  for (std::size_t j = 0; j < indices_.size(); ++j)
    position.emplace(indices_[j], static_cast<std::uint32_t>(j));

  parent_.assign(indices_.size(), 0);
  variable_.assign(indices_.size(), 0);
  for (std::size_t j = 1; j < indices_.size(); ++j) {
    MultiIndex parent = indices_[j];
    int last = n - 1;
    while (parent[static_cast<std::size_t>(last)] == 0) --last;
    --parent[static_cast<std::size_t>(last)];
    parent_[j] = position.at(parent);
    variable_[j] = static_cast<std::uint32_t>(last);
  }
}

void FeatureBasis::evaluate(std::span<const double> x, std::span<double> out) const {
  if (x.size() != static_cast<std::size_t>(n_))
    throw Error(Errc::ShapeMismatch, "feature input has " + std::to_string(x.size()) +
                                         " components, expected " + std::to_string(n_));
  if (out.size() < indices_.size())
    throw Error(Errc::ShapeMismatch, "feature output buffer too small");
  out[0] = 1.0;
  for (std::size_t j = 1; j < indices_.size(); ++j) out[j] = out[parent_[j]] * x[variable_[j]];
}

std::vector<double> FeatureBasis::operator()(std::span<const double> x) const {
  std::vector<double> out(indices_.size());
  evaluate(x, out);
  return out;
}

Matrix FeatureBasis::evaluate_rows(std::span<const std::vector<double>> samples) const {
  Matrix m(samples.size(), dim());
  for (std::size_t i = 0; i < samples.size(); ++i) evaluate(samples[i], m.row(i));
  return m;
}

std::vector<double> feature_map(std::span<const double> x, int degree) {
  return FeatureBasis(static_cast<int>(x.size()), degree)(x);
}

}  // namespace qdnn
