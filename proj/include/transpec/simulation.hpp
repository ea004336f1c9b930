#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "transpec/bootstrap.hpp"
#include "transpec/dataset.hpp"
#include "transpec/influence_oracle.hpp"
#include "transpec/rng.hpp"
#include "transpec/transform_family.hpp"

namespace transpec {

enum class RId { R1, R2, R3 };

[[nodiscard]] double r_eval(RId r, double y) noexcept;
[[nodiscard]] std::string r_name(RId r);
/// Throws InvalidConfig for names other than r1, r2, r3.
[[nodiscard]] RId parse_r(const std::string& name);

enum class AltKind { Null, Fixed, Local };

struct Alternative {
  AltKind kind = AltKind::Null;
  RId r = RId::R1;
  double c = 0.0;      ///< mixing weight for Fixed
  double scale = 1.0;  ///< multiplies r for Local
};

struct SimScenario {
  double theta0 = 1.0;
  Alternative alternative;
  std::size_t n = 100;
  OracleModel model;  ///< g(x) = slope·x + intercept, X ~ U(support), ε ~ N(0, σ²)

  void validate() const;
};

/// The true transformation of a scenario, with h(0) = 0 and h(1) = 1.
class SimTransform {
 public:
  explicit SimTransform(const SimScenario& scenario);

  [[nodiscard]] double eval(double y) const;
  [[nodiscard]] double inverse(double s) const;
  [[nodiscard]] const NormalizedTransform& null_transform() const noexcept { return h0_; }
  [[nodiscard]] const SimScenario& scenario() const noexcept { return sc_; }
  /// r₀ of the local alternative (zero otherwise).
  [[nodiscard]] double r0(double y) const;

 private:
  SimScenario sc_;
  NormalizedTransform h0_;
  double lam_inv0_ = 0.0;
  double lam_inv1_ = 1.0;
  double den_ = 1.0;
};

/// Throws NonMonotoneMixture unless the transformation is strictly increasing
/// on a 1201-point scan of s ∈ [−6, 6].
void check_monotone(const SimTransform& h);

[[nodiscard]] Dataset generate(const SimScenario& scenario, Rng& rng);
[[nodiscard]] Dataset gen_null(const SimScenario& scenario, std::uint64_t seed);
[[nodiscard]] Dataset gen_fixed_alternative(const SimScenario& scenario, std::uint64_t seed);
[[nodiscard]] Dataset gen_local_alternative(const SimScenario& scenario, std::uint64_t seed);

struct StudyCell {
  std::string label;
  SimScenario scenario;
  WeightSpec weight;
  std::size_t runs = 200;
};

struct StudyConfig {
  std::vector<StudyCell> cells;
  GofConfig gof;                       ///< weight and alphas are taken from here unless a cell overrides the weight
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  double max_failure_fraction = 0.05;  ///< above this a cell is marked invalid
  bool timing = false;                 ///< record mean runtime per cell
};

struct CellResult {
  std::string label;
  SimScenario scenario;
  WeightSpec weight;
  std::size_t runs = 0;
  std::size_t used = 0;
  std::size_t failures = 0;
  bool valid = true;
  std::vector<double> alphas;
  std::vector<std::size_t> rejections;
  std::vector<double> rates;
  std::vector<double> se;
  std::optional<double> mean_seconds;
};

struct StudyResult {
  std::vector<CellResult> cells;
  std::uint64_t seed = 0;
};

[[nodiscard]] StudyResult rejection_study(const StudyConfig& config);

/// Cells of Table 1: θ₀ ∈ {0, 0.5, 1, 2} × {null, r1–r3 × c ∈ {0.2, …, 1}}.
[[nodiscard]] std::vector<StudyCell> table1_cells(std::size_t runs_null, std::size_t runs_alt,
                                                  std::size_t n = 100);
/// Cells of Table 4: θ₀ ∈ {1, 2} × {null, r1 × c} × {flat, 5 %/5 % trimmed}.
[[nodiscard]] std::vector<StudyCell> table4_cells(std::size_t runs_null, std::size_t runs_alt,
                                                  std::size_t n = 100);

struct CurveRow {
  double y = 0.0;
  double h = 0.0;
  double fit = 0.0;
  double null_part = 0.0;
};

struct CurveConfig {
  double theta0 = 1.0;
  RId r = RId::R1;
  double c = 0.0;
  std::optional<Interval> y_range;  ///< empty: [h⁻¹(−1), h⁻¹(3)]
  std::size_t n_points = 101;
  std::size_t n = 100;              ///< size of the sample behind the parametric fit
  std::uint64_t seed = 0;
};

struct CurveTable {
  std::vector<CurveRow> rows;
  GammaPoint gamma_hat;
};

/// True h, fitted (Λ_θ̂ − ĉ₂)/ĉ₁ from a fresh sample, and the null part
/// y ↦ Λ_θ₀(y(Λ_θ₀⁻¹(1) − Λ_θ₀⁻¹(0)) + Λ_θ₀⁻¹(0)).
[[nodiscard]] CurveTable curve_grid(const CurveConfig& config, const NptConfig& npt = {},
                                    const TestConfig& test = {});

}  // namespace transpec
