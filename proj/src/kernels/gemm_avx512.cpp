#include <immintrin.h>

#include <algorithm>
#include <cstdint>
#include <type_traits>

#include "qdnn/kernels.hpp"

namespace qdnn::kernels::avx512 {
namespace {

constexpr std::size_t kLanes = 8;
constexpr int kPanelVectors = 4;   // up to 32 output columns per panel
constexpr std::size_t kDepthBlock = 256;
constexpr std::size_t kPrefetch = 256;  // doubles ahead along a row of A

// Output rows per register tile, chosen so rows * vectors <= 24 of the 32
// zmm registers hold accumulators.
constexpr int rows_for(int vectors) { return vectors >= 4 ? 6 : vectors == 3 ? 8 : 12; }

// Panel width in vectors. Short A (a few dozen rows) gets the width whose
// row tile divides m, so no rows fall to the one-row kernel.
int panel_vectors(std::size_t m) {
  if (m >= 64) return kPanelVectors;
  for (int v : {4, 3, 2})
    if (m % static_cast<std::size_t>(rows_for(v)) == 0) return v;
  return kPanelVectors;
}

// C[0:R, 0:8*NV] (+)= A[0:R, 0:kc] * B[0:kc, 0:8*NV]. The last vector of
// the panel is masked by `tail`. Accumulators start at zero and are folded
// into C afterwards so that they stay in registers across the depth loop.
template <int R, int NV>
void micro(std::size_t kc, const double* a, std::size_t lda, const double* b, std::size_t ldb,
           double* c, std::size_t ldc, __mmask8 tail, bool accumulate) {
  __m512d acc[R][NV];
#pragma GCC unroll 16
  for (int r = 0; r < R; ++r)
#pragma GCC unroll 4
    for (int v = 0; v < NV; ++v) acc[r][v] = _mm512_setzero_pd();

  auto step = [&](std::size_t t) __attribute__((always_inline)) {
    __m512d bv[NV];
#pragma GCC unroll 4
    for (int v = 0; v < NV - 1; ++v) bv[v] = _mm512_loadu_pd(b + t * ldb + v * kLanes);
    bv[NV - 1] = _mm512_maskz_loadu_pd(tail, b + t * ldb + (NV - 1) * kLanes);
#pragma GCC unroll 16
    for (int r = 0; r < R; ++r) {
      const __m512d av = _mm512_set1_pd(a[r * lda + t]);
#pragma GCC unroll 4
      for (int v = 0; v < NV; ++v) acc[r][v] = _mm512_fmadd_pd(av, bv[v], acc[r][v]);
    }
  };

  // Rows of A are read in parallel streams that the hardware prefetcher
  // loses at page boundaries, so fetch each row ahead explicitly.
  std::size_t t = 0;
  for (; t + kLanes <= kc; t += kLanes) {
#pragma GCC unroll 16
    for (int r = 0; r < R; ++r)
      _mm_prefetch(reinterpret_cast<const char*>(a + r * lda + t + kPrefetch), _MM_HINT_T0);
#pragma GCC unroll 8
    for (std::size_t u = 0; u < kLanes; ++u) step(t + u);
  }
  for (; t < kc; ++t) step(t);

#pragma GCC unroll 16
  for (int r = 0; r < R; ++r)
#pragma GCC unroll 4
    for (int v = 0; v < NV; ++v) {
      const __mmask8 mk = v == NV - 1 ? tail : static_cast<__mmask8>(0xff);
      double* dst = c + r * ldc + v * kLanes;
      const __m512d out =
          accumulate ? _mm512_add_pd(acc[r][v], _mm512_maskz_loadu_pd(mk, dst)) : acc[r][v];
      _mm512_mask_storeu_pd(dst, mk, out);
    }
}

// One column panel of C over the full depth. Each register tile of rows
// walks the depth in blocks, so A rows are read front to back once.
template <int NV>
void panel(std::size_t m, std::size_t k, const double* a, std::size_t lda, const double* b,
           std::size_t ldb, double* c, std::size_t ldc, __mmask8 tail, bool accumulate) {
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
    const std::size_t rem = width - (vectors - 1) * kLanes;
    const auto tail = static_cast<__mmask8>((1u << rem) - 1u);
    switch (vectors) {
      case 4: panel<4>(m, k, a, lda, b + j0, ldb, c + j0, ldc, tail, accumulate); break;
      case 3: panel<3>(m, k, a, lda, b + j0, ldb, c + j0, ldc, tail, accumulate); break;
      case 2: panel<2>(m, k, a, lda, b + j0, ldb, c + j0, ldc, tail, accumulate); break;
      default: panel<1>(m, k, a, lda, b + j0, ldb, c + j0, ldc, tail, accumulate); break;
    }
  }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const __m512d av = _mm512_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes)
    _mm512_storeu_pd(y + i, _mm512_fmadd_pd(av, _mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace qdnn::kernels::avx512
