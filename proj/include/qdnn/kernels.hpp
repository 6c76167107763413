#pragma once

// Dense double-precision kernels used by the training inner loops.
//
// Each kernel has a portable scalar reference and optional AVX2/FMA and
// AVX-512 variants. The variant is chosen once at startup from the CPU's
// capabilities; QDNN_ISA={scalar,avx2,avx512} in the environment or
// set_active_isa() override the choice. Variants differ only in summation
// order, so results agree to rounding but are not bitwise equal across ISAs.
// A given ISA is deterministic.

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace qdnn::kernels {

enum class Isa { Scalar, Avx2, Avx512 };

std::string_view isa_name(Isa isa) noexcept;
std::optional<Isa> parse_isa(std::string_view name) noexcept;

/// True if the variant was compiled in and the running CPU supports it.
bool isa_available(Isa isa) noexcept;
std::vector<Isa> available_isas();

/// Best available variant, unless overridden through QDNN_ISA.
Isa detect_isa() noexcept;
Isa active_isa() noexcept;
/// Throws qdnn::Error(ConfigInvalid) when the variant is unavailable.
void set_active_isa(Isa isa);

/// C = A * B, or C += A * B when `accumulate`, for row-major A (m x k),
/// B (k x n), C (m x n):
///   C[i*ldc + j] (+)= sum_{t<k} A[i*lda + t] * B[t*ldb + j].
/// No dimension needs to be a multiple of the vector width; nothing outside
/// the m x n block of C is written.
using GemmFn = void (*)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                        std::size_t lda, const double* b, std::size_t ldb, double* c,
                        std::size_t ldc, bool accumulate);

/// y[i] += alpha * x[i]
using AxpyFn = void (*)(std::size_t n, double alpha, const double* x, double* y);

GemmFn gemm_for(Isa isa);
AxpyFn axpy_for(Isa isa);

inline void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                 const double* b, std::size_t ldb, double* c, std::size_t ldc,
                 bool accumulate = false) {
  gemm_for(active_isa())(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

inline void axpy(std::size_t n, double alpha, const double* x, double* y) {
  axpy_for(active_isa())(n, alpha, x, y);
}

namespace scalar {
void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);
void axpy(std::size_t n, double alpha, const double* x, double* y);
}  // namespace scalar

namespace avx2 {
void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);
void axpy(std::size_t n, double alpha, const double* x, double* y);
}  // namespace avx2

namespace avx512 {
void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);
void axpy(std::size_t n, double alpha, const double* x, double* y);
}  // namespace avx512

}  // namespace qdnn::kernels
