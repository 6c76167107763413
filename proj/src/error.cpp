#include "qdnn/error.hpp"

namespace qdnn {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::NotHermitian: return "NotHermitian";
    case Errc::TraceNotOne: return "TraceNotOne";
    case Errc::NotPositive: return "NotPositive";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::ConstraintViolated: return "ConstraintViolated";
    case Errc::DomainError: return "DomainError";
    case Errc::Overflow: return "Overflow";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::Diverged: return "Diverged";
    case Errc::FormatVersionUnsupported: return "FormatVersionUnsupported";
    case Errc::CorruptChecksum: return "CorruptChecksum";
    case Errc::RejectionBudgetExhausted: return "RejectionBudgetExhausted";
    case Errc::FamilyMismatch: return "FamilyMismatch";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace qdnn
