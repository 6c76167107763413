#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qdnn {

enum class Errc {
  NotHermitian,
  TraceNotOne,
  NotPositive,
  ConfigInvalid,
  ConstraintViolated,
  DomainError,
  Overflow,
  ShapeMismatch,
  EmptyBatch,
  Diverged,
  FormatVersionUnsupported,
  CorruptChecksum,
  RejectionBudgetExhausted,
  FamilyMismatch,
  ParseError,
  IoError,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace qdnn
