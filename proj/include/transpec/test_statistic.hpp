#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "transpec/dataset.hpp"
#include "transpec/npt_estimator.hpp"
#include "transpec/transform_family.hpp"

namespace transpec {

enum class WeightKind { Flat, Trimmed };

struct WeightSpec {
  WeightKind kind = WeightKind::Flat;
  double trim_lower = 0.05;
  double trim_upper = 0.05;
};

/// Indicator weight w = 1 on a compact y-interval.
class WeightFn {
 public:
  WeightFn() = default;
  explicit WeightFn(Interval support) : support_(support) {}

  /// Flat: the observed y-range. Trimmed: drops floor(f·n) observations at
  /// each end of the sorted sample.
  [[nodiscard]] static WeightFn from_sample(const WeightSpec& spec, std::span<const double> y);

  [[nodiscard]] double operator()(double y) const noexcept {
    return support_.contains(y) ? 1.0 : 0.0;
  }
  [[nodiscard]] Interval support() const noexcept { return support_; }
  [[nodiscard]] std::vector<double> values(std::span<const double> y) const;

 private:
  Interval support_{-1e300, 1e300};
};

/// Optional boxes C₁ × C₂. c₁ is always kept nonnegative.
struct CBoxes {
  std::optional<Interval> c1;
  std::optional<Interval> c2;
};

struct GammaPoint {
  double c1 = 1.0;
  double c2 = 0.0;
  Theta theta;
};

struct ProfileFit {
  double c1 = 0.0;
  double c2 = 0.0;
  double objective = 0.0;
};

/// Weighted least squares of lam on (h, 1). Throws SingularDesign when the
/// weighted variance of h is below 1e-12.
[[nodiscard]] ProfileFit profile_c(std::span<const double> h_vals, std::span<const double> lam_vals,
                                   std::span<const double> w_vals, const CBoxes& boxes = {});

struct ThetaOptimizer {
  std::size_t grid = 41;
  double tolerance = 1e-6;
  std::size_t max_iterations = 500;
};

struct TestConfig {
  WeightSpec weight;
  CBoxes boxes;
  ThetaOptimizer optimizer;
};

struct TnResult {
  double t_n = 0.0;
  GammaPoint gamma;
  /// Refinement did not improve on the grid optimum.
  bool stalled = false;
  std::size_t evaluations = 0;
};

/// min over γ of Σ_j w_j (h_j c₁ + c₂ − Λ_θ(y_j))².
[[nodiscard]] TnResult minimize_distance(std::span<const double> y, std::span<const double> h_vals,
                                         std::span<const double> w_vals,
                                         const ParametricFamily& family, const TestConfig& config);

[[nodiscard]] TnResult compute_Tn(const Dataset& data, const NptEstimate& h_hat,
                                  const ParametricFamily& family, const WeightFn& weight,
                                  const TestConfig& config);

/// n⁻¹ Σ_j w_j (h_j c₁ + c₂ − Λ_θ(y_j))².
[[nodiscard]] double empirical_M(const GammaPoint& gamma, const Dataset& data,
                                 std::span<const double> h_vals, const WeightFn& weight,
                                 const ParametricFamily& family);

}  // namespace transpec
