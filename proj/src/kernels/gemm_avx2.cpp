#include <immintrin.h>

#include <algorithm>
#include <type_traits>

#include "qdnn/kernels.hpp"

namespace qdnn::kernels::avx2 {
namespace {

constexpr std::size_t kLanes = 4;
constexpr int kPanelVectors = 3;   // up to 12 output columns per panel
constexpr std::size_t kDepthBlock = 256;
constexpr std::size_t kLine = 8;        // doubles per cache line
constexpr std::size_t kPrefetch = 256;  // doubles ahead along a row of A

// 16 ymm registers: rows * vectors accumulators plus the B vectors and
// one broadcast.
constexpr int rows_for(int vectors) { return vectors >= 3 ? 4 : vectors == 2 ? 6 : 8; }

// Panel width in vectors. Short A (a few dozen rows) gets the width whose
// row tile divides m, so no rows fall to the one-row kernel.
int panel_vectors(std::size_t m) {
  if (m >= 64) return kPanelVectors;
  for (int v : {3, 2, 1})
    if (m % static_cast<std::size_t>(rows_for(v)) == 0) return v;
  return kPanelVectors;
}

inline __m256i lane_mask(std::size_t active) {
  alignas(32) static constexpr long long kBits[8] = {-1, -1, -1, -1, 0, 0, 0, 0};
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(kBits + 4 - active));
}

// C[0:R, 0:4*NV] (+)= A[0:R, 0:kc] * B[0:kc, 0:4*NV], last vector masked.
template <int R, int NV>
void micro(std::size_t kc, const double* a, std::size_t lda, const double* b, std::size_t ldb,
           double* c, std::size_t ldc, __m256i tail, bool accumulate) {
  const __m256i full = _mm256_set1_epi64x(-1);
  __m256d acc[R][NV];
#pragma GCC unroll 16
  for (int r = 0; r < R; ++r)
#pragma GCC unroll 4
    for (int v = 0; v < NV; ++v) acc[r][v] = _mm256_setzero_pd();

  auto step = [&](std::size_t t) __attribute__((always_inline)) {
    __m256d bv[NV];
#pragma GCC unroll 4
    for (int v = 0; v < NV - 1; ++v) bv[v] = _mm256_loadu_pd(b + t * ldb + v * kLanes);
    bv[NV - 1] = _mm256_maskload_pd(b + t * ldb + (NV - 1) * kLanes, tail);
#pragma GCC unroll 16
    for (int r = 0; r < R; ++r) {
      const __m256d av = _mm256_broadcast_sd(a + r * lda + t);
#pragma GCC unroll 4
      for (int v = 0; v < NV; ++v) acc[r][v] = _mm256_fmadd_pd(av, bv[v], acc[r][v]);
    }
  };

  // Explicit prefetch along each row of A; see the AVX-512 kernel.
  std::size_t t = 0;
  for (; t + kLine <= kc; t += kLine) {
#pragma GCC unroll 16
    for (int r = 0; r < R; ++r)
      _mm_prefetch(reinterpret_cast<const char*>(a + r * lda + t + kPrefetch), _MM_HINT_T0);
#pragma GCC unroll 8
    for (std::size_t u = 0; u < kLine; ++u) step(t + u);
  }
  for (; t < kc; ++t) step(t);

#pragma GCC unroll 16
  for (int r = 0; r < R; ++r)
#pragma GCC unroll 4
    for (int v = 0; v < NV; ++v) {
      const __m256i mk = v == NV - 1 ? tail : full;
      double* dst = c + r * ldc + v * kLanes;
      const __m256d out =
          accumulate ? _mm256_add_pd(acc[r][v], _mm256_maskload_pd(dst, mk)) : acc[r][v];
      _mm256_maskstore_pd(dst, mk, out);
    }
}

template <int NV>
void panel(std::size_t m, std::size_t k, const double* a, std::size_t lda, const double* b,
           std::size_t ldb, double* c, std::size_t ldc, __m256i tail, bool accumulate) {
  constexpr int R = rows_for(NV);
  auto rows = [&](auto tile_rows, std::size_t i) {
    constexpr int TR = decltype(tile_rows)::value;
    for (std::size_t t0 = 0; t0 < k; t0 += kDepthBlock)
      micro<TR, NV>(std::min(kDepthBlock, k - t0), a + i * lda + t0, lda, b + t0 * ldb, ldb,
                    c + i * ldc, ldc, tail, accumulate || t0 > 0);
  };
  std::size_t i = 0;
  for (; i + R <= m; i += R) rows(std::integral_constant<int, R>{}, i);
  for (; i < m; ++i) rows(std::integral_constant<int, 1>{}, i);
}

}  // namespace

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (accumulate) return;
    for (std::size_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, 0.0);
    return;
  }
  const std::size_t per_panel = static_cast<std::size_t>(panel_vectors(m));
  for (std::size_t j0 = 0; j0 < n; j0 += per_panel * kLanes) {
    const std::size_t width = std::min<std::size_t>(per_panel * kLanes, n - j0);
    const int vectors = static_cast<int>((width + kLanes - 1) / kLanes);
    const __m256i tail = lane_mask(width - (vectors - 1) * kLanes);
    switch (vectors) {
      case 3: panel<3>(m, k, a, lda, b + j0, ldb, c + j0, ldc, tail, accumulate); break;
      case 2: panel<2>(m, k, a, lda, b + j0, ldb, c + j0, ldc, tail, accumulate); break;
      default: panel<1>(m, k, a, lda, b + j0, ldb, c + j0, ldc, tail, accumulate); break;
    }
  }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace qdnn::kernels::avx2
