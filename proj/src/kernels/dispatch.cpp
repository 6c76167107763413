#include <atomic>
#include <cstdlib>
#include <string>

#include "qdnn/error.hpp"
#include "qdnn/kernels.hpp"

namespace qdnn::kernels {
namespace {

bool cpu_has(Isa isa) noexcept {
#if defined(__x86_64__) || defined(__i386__)
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    case Isa::Avx512:
      return __builtin_cpu_supports("avx512f");
  }
  return false;
#else
  return isa == Isa::Scalar;
#endif
}

bool compiled_in(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#ifdef QDNN_HAVE_AVX2
      return true;
#else
      return false;
#endif
    case Isa::Avx512:
#ifdef QDNN_HAVE_AVX512
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::atomic<int>& active_slot() {
  static std::atomic<int> slot{static_cast<int>(detect_isa())};
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Avx512:
      return "avx512";
  }
  return "unknown";
}

std::optional<Isa> parse_isa(std::string_view name) noexcept {
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Avx512})
    if (isa_name(isa) == name) return isa;
  return std::nullopt;
}

bool isa_available(Isa isa) noexcept { return compiled_in(isa) && cpu_has(isa); }

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Avx512})
    if (isa_available(isa)) out.push_back(isa);
  return out;
}

Isa detect_isa() noexcept {
  if (const char* env = std::getenv("QDNN_ISA")) {
    if (auto requested = parse_isa(env); requested && isa_available(*requested)) return *requested;
  }
  if (isa_available(Isa::Avx512)) return Isa::Avx512;
  if (isa_available(Isa::Avx2)) return Isa::Avx2;
  return Isa::Scalar;
}

Isa active_isa() noexcept { return static_cast<Isa>(active_slot().load(std::memory_order_relaxed)); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa))
    throw Error(Errc::ConfigInvalid,
                "kernel variant '" + std::string(isa_name(isa)) + "' is not available");
  active_slot().store(static_cast<int>(isa), std::memory_order_relaxed);
}

GemmFn gemm_for(Isa isa) {
  switch (isa) {
#ifdef QDNN_HAVE_AVX512
    case Isa::Avx512:
      return &avx512::gemm;
#endif
#ifdef QDNN_HAVE_AVX2
    case Isa::Avx2:
      return &avx2::gemm;
#endif
    default:
      return &scalar::gemm;
  }
}

AxpyFn axpy_for(Isa isa) {
  switch (isa) {
#ifdef QDNN_HAVE_AVX512
    case Isa::Avx512:
      return &avx512::axpy;
#endif
#ifdef QDNN_HAVE_AVX2
    case Isa::Avx2:
      return &avx2::axpy;
#endif
    default:
      return &scalar::axpy;
  }
}

}  // namespace qdnn::kernels
