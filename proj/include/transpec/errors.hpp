#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace transpec {

/// Failure categories raised by the library.
///
/// Everything except `Internal` is a statistical-input error: the data or
/// configuration cannot support the requested computation. The CLI maps
/// those to exit code 2 and `Internal` to exit code 1.
enum class ErrorKind {
  DegenerateScale,
  BracketExhausted,
  ZeroVariance,
  DegenerateAnchors,
  EmptyNeighborhood,
  VanishingDenominator,
  GridTooCoarse,
  SingularDesign,
  OptimizerStall,
  InsufficientReplications,
  BlockEstimatorFailure,
  SingularPhi1,
  QuadratureFailure,
  NonPositiveDefinite,
  NonMonotoneMixture,
  ParseError,
  MissingColumn,
  InvalidConfig,
  Internal,
};

[[nodiscard]] std::string_view error_kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
  [[nodiscard]] bool is_input_error() const noexcept {
    return kind_ != ErrorKind::Internal;
  }

 private:
  ErrorKind kind_;
};

/// Raised by the CSV reader; carries the 1-based line and column.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);

  [[nodiscard]] std::size_t line() const noexcept { return line_; }
  [[nodiscard]] std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace transpec
