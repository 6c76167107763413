#pragma once

// Nelder-Mead downhill simplex for small unconstrained problems.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace qdnn {

template <std::size_t N>
struct SimplexResult {
  std::array<double, N> x{};
  double value = 0.0;
  std::size_t evaluations = 0;
  int iterations = 0;
  bool converged = false;
};

struct SimplexOptions {
  double value_tol = 1e-8;   // spread of vertex values
  double point_tol = 1e-7;   // max vertex distance from the best vertex
  int max_iterations = 400;
};

/// Minimizes f from an initial simplex spanned by x0 and x0 + step_i e_i.
/// Stops when both the vertex value spread and the simplex extent fall
/// below their tolerances.
template <std::size_t N, class F>
SimplexResult<N> nelder_mead(F&& f, const std::array<double, N>& x0,
                             const std::array<double, N>& step, const SimplexOptions& opt) {
  using Point = std::array<double, N>;
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;

  std::array<Point, N + 1> pts;
  std::array<double, N + 1> vals;
  SimplexResult<N> out;

  pts[0] = x0;
  for (std::size_t i = 0; i < N; ++i) {
    pts[i + 1] = x0;
    pts[i + 1][i] += step[i];
  }
  for (std::size_t i = 0; i <= N; ++i) vals[i] = f(pts[i]);
  out.evaluations = N + 1;

  std::array<std::size_t, N + 1> order;
  auto sort_vertices = [&] {
    for (std::size_t i = 0; i <= N; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::array<Point, N + 1> p2;
    std::array<double, N + 1> v2;
    for (std::size_t i = 0; i <= N; ++i) {
      p2[i] = pts[order[i]];
      v2[i] = vals[order[i]];
    }
    pts = p2;
    vals = v2;
  };

  auto blend = [](const Point& a, const Point& b, double t) {
    Point r;
    for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + t * (b[i] - a[i]);
    return r;
  };

  sort_vertices();
  for (out.iterations = 0; out.iterations < opt.max_iterations; ++out.iterations) {
    double extent = 0.0;
    for (std::size_t v = 1; v <= N; ++v)
      for (std::size_t i = 0; i < N; ++i)
        extent = std::max(extent, std::abs(pts[v][i] - pts[0][i]));
    if (vals[N] - vals[0] <= opt.value_tol && extent <= opt.point_tol) {
      out.converged = true;
      break;
    }

    Point centroid{};
    for (std::size_t v = 0; v < N; ++v)
      for (std::size_t i = 0; i < N; ++i) centroid[i] += pts[v][i] / static_cast<double>(N);

    const Point reflected = blend(centroid, pts[N], -kReflect);
    const double fr = f(reflected);
    ++out.evaluations;

    if (fr < vals[0]) {
      const Point expanded = blend(centroid, pts[N], -kExpand);
      const double fe = f(expanded);
      ++out.evaluations;
      if (fe < fr) {
        pts[N] = expanded;
        vals[N] = fe;
      } else {
        pts[N] = reflected;
        vals[N] = fr;
      }
    } else if (fr < vals[N - 1]) {
      pts[N] = reflected;
      vals[N] = fr;
    } else {
      const bool outside = fr < vals[N];
      const Point contracted =
          outside ? blend(centroid, reflected, kContract) : blend(centroid, pts[N], kContract);
      const double fc = f(contracted);
      ++out.evaluations;
      if (fc < (outside ? fr : vals[N])) {
        pts[N] = contracted;
        vals[N] = fc;
      } else {
        for (std::size_t v = 1; v <= N; ++v) {
          pts[v] = blend(pts[0], pts[v], kShrink);
          vals[v] = f(pts[v]);
        }
        out.evaluations += N;
      }
    }
    sort_vertices();
  }

  out.x = pts[0];
  out.value = vals[0];
  return out;
}

}  // namespace qdnn
