#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "transpec/bootstrap.hpp"
#include "transpec/influence_oracle.hpp"
#include "transpec/relevant_test.hpp"
#include "transpec/simulation.hpp"

namespace transpec {

using Json = nlohmann::json;

enum class Command { Fit, Test, RelevantTest, Simulate, LimitLaw, Curves };

[[nodiscard]] std::string command_name(Command c);
[[nodiscard]] Command parse_command(const std::string& name);

struct SimulateOptions {
  int table = 1;                         ///< 1 or 4
  std::size_t runs = 200;                ///< null cells
  std::optional<std::size_t> runs_alt;   ///< alternative cells; empty: runs
  std::size_t n = 100;
  std::vector<std::string> cells;        ///< keep only these labels; empty: all
  double max_failure_fraction = 0.05;
};

struct LocalSpec {
  RId r = RId::R1;
  double scale = 1.0;
};

struct LimitLawOptions {
  double theta0 = 1.0;
  std::size_t nodes = 400;
  std::size_t sims = 100000;
  double alpha = 0.05;
  std::vector<Interval> v_support{{0.1, 0.9}};
  LimitLawConfig quadrature;
  std::optional<LocalSpec> local;
  /// Sample size behind the local alternative. Only enters through r₀.
  std::size_t n = 100;
};

struct CurvesOptions {
  double theta0 = 1.0;
  RId r = RId::R1;
  double c = 0.0;
  std::optional<Interval> y_range;
  std::size_t n_points = 101;
  std::size_t n = 100;
};

struct RunConfig {
  Command command = Command::Fit;
  std::string data;
  std::string family = "yeo-johnson";
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  std::vector<double> alphas{0.05, 0.10};
  NptConfig npt;
  TestConfig test;
  BootstrapConfig bootstrap;
  RelevantConfig relevant;
  SimulateOptions simulate;
  LimitLawOptions limit_law;
  CurvesOptions curves;
  std::string output;  ///< JSON report; empty: stdout
  std::string csv;     ///< side table; empty: none ("-" is stdout)
  bool timing = false;

  /// Ranges, enum values, and existence of the data file.
  void validate() const;
  [[nodiscard]] std::uint64_t seed_or_zero() const noexcept { return seed.value_or(0); }
};

/// Complete JSON form. `workers` is included only when `with_workers`.
[[nodiscard]] Json to_json(const RunConfig& config, bool with_workers = true);
/// Missing keys keep their defaults; unknown keys raise InvalidConfig.
[[nodiscard]] RunConfig config_from_json(const Json& j);
/// Apply the keys present in `j` on top of `base`.
void merge_json(RunConfig& base, const Json& j);

/// to_json without `workers` and the output paths: everything that determines the result.
[[nodiscard]] Json embedded_config(const RunConfig& config);
/// Sorted-key dump of embedded_config.
[[nodiscard]] std::string canonical_dump(const RunConfig& config);
/// FNV-1a 64 of canonical_dump.
[[nodiscard]] std::uint64_t config_hash(const RunConfig& config);
[[nodiscard]] std::string hex64(std::uint64_t v);

}  // namespace transpec
