#include "qdnn/kernels.hpp"

namespace qdnn::kernels::scalar {

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    if (!accumulate)
      for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      const double ait = a[i * lda + t];
      const double* bt = b + t * ldb;
      for (std::size_t j = 0; j < n; ++j) ci[j] += ait * bt[j];
    }
  }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace qdnn::kernels::scalar
