#pragma once

#include <exception>
#include <string>
#include <string_view>

#include "transpec/config.hpp"
#include "transpec/dataset.hpp"

namespace transpec {

/// Header-driven CSV with columns y, x1, …, xd in any order. Other columns
/// are ignored. Throws ParseError(line, column) and MissingColumn.
[[nodiscard]] Dataset parse_dataset_csv(std::string_view text);
[[nodiscard]] Dataset read_dataset(const std::string& path);
[[nodiscard]] std::string dataset_csv(const Dataset& data);
void write_text(const std::string& path, const std::string& text);

struct RunReport {
  Json json;
  std::string csv;  ///< side table; empty when the command has none
};

/// Validates the config and runs the command.
[[nodiscard]] RunReport run(const RunConfig& config);

/// Report as written to disk: two-space indented JSON with a trailing newline.
[[nodiscard]] std::string render(const Json& report);

/// {"error": {"kind", "message"[, "line", "column"]}}.
[[nodiscard]] Json error_payload(const std::exception& e);
/// 2 for statistical-input errors, 1 otherwise.
[[nodiscard]] int exit_code(const std::exception& e) noexcept;

}  // namespace transpec
