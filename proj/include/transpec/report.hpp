#pragma once

#include <string>

#include "transpec/config.hpp"

namespace transpec {

inline constexpr int kReportSchemaVersion = 1;

[[nodiscard]] Json to_json(const GammaPoint& g);
[[nodiscard]] Json to_json(const BandwidthSet& b);
[[nodiscard]] Json to_json(const GofReport& r);
[[nodiscard]] Json to_json(const RelevantReport& r);
[[nodiscard]] Json to_json(const StudyResult& r);
[[nodiscard]] Json to_json(const NystromResult& r);
[[nodiscard]] Json to_json(const CurveTable& t);
/// The estimate on its u-grid together with ĥ on `y_points` points of the y window.
[[nodiscard]] Json npt_grid_json(const NptEstimate& est, std::size_t y_points = 101);

/// One row per cell: label, scenario, runs, failures, and rate/se per level.
[[nodiscard]] std::string study_csv(const StudyResult& r);
/// Columns y, h, fit, null_part.
[[nodiscard]] std::string curves_csv(const CurveTable& t);
/// Columns u, q_raw, q.
[[nodiscard]] std::string npt_grid_csv(const NptEstimate& est);

/// Shortest round-trip decimal form of a double.
[[nodiscard]] std::string format_double(double v);

}  // namespace transpec
