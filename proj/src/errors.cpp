#include "transpec/errors.hpp"

namespace transpec {

std::string_view error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DegenerateScale: return "DegenerateScale";
    case ErrorKind::BracketExhausted: return "BracketExhausted";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::DegenerateAnchors: return "DegenerateAnchors";
    case ErrorKind::EmptyNeighborhood: return "EmptyNeighborhood";
    case ErrorKind::VanishingDenominator: return "VanishingDenominator";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::SingularDesign: return "SingularDesign";
    case ErrorKind::OptimizerStall: return "OptimizerStall";
    case ErrorKind::InsufficientReplications: return "InsufficientReplications";
    case ErrorKind::BlockEstimatorFailure: return "BlockEstimatorFailure";
    case ErrorKind::SingularPhi1: return "SingularPhi1";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::NonPositiveDefinite: return "NonPositiveDefinite";
    case ErrorKind::NonMonotoneMixture: return "NonMonotoneMixture";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Internal: return "Internal";
  }
  return "Unknown";
}

ParseError::ParseError(std::size_t line, std::size_t column,
                       const std::string& message)
    : Error(ErrorKind::ParseError,
            "line " + std::to_string(line) + ", column " +
                std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace transpec
