#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "transpec/dataset.hpp"
#include "transpec/kernels.hpp"
#include "transpec/transform_family.hpp"

namespace transpec {

/// T̂(y) = (F̂_Y(y) − F̂_Y(a)) / (F̂_Y(b) − F̂_Y(a)) with F̂_Y right-continuous.
class EmpiricalRescale {
 public:
  EmpiricalRescale() = default;
  /// Throws DegenerateAnchors if F̂_Y(b) = F̂_Y(a).
  EmpiricalRescale(std::vector<double> y, double a = 0.0, double b = 1.0);

  [[nodiscard]] double operator()(double y) const noexcept {
    return (cdf(y) - f_a_) / (f_b_ - f_a_);
  }
  [[nodiscard]] double cdf(double y) const noexcept;
  [[nodiscard]] double f_a() const noexcept { return f_a_; }
  [[nodiscard]] double f_b() const noexcept { return f_b_; }
  [[nodiscard]] double anchor_a() const noexcept { return a_; }
  [[nodiscard]] double anchor_b() const noexcept { return b_; }
  [[nodiscard]] const std::vector<double>& sorted() const noexcept { return sorted_; }

 private:
  std::vector<double> sorted_;
  double a_ = 0.0;
  double b_ = 1.0;
  double f_a_ = 0.0;
  double f_b_ = 1.0;
};

[[nodiscard]] EmpiricalRescale empirical_rescale(const Dataset& data, double a = 0.0,
                                                 double b = 1.0);

enum class VWeightKind {
  Smooth,   ///< product of normalized (1 − t²)³ bumps on each coordinate interval
  Uniform,  ///< uniform density on the box
};

/// The covariate weight v of the smoothed-median objective.
struct VWeight {
  VWeightKind kind = VWeightKind::Smooth;
  std::vector<Interval> support;

  /// Density at x (integrates to one over the box).
  [[nodiscard]] double density(std::span<const double> x) const noexcept;
  /// ∂/∂x_1 of the density.
  [[nodiscard]] double density_d1(std::span<const double> x) const noexcept;
};

struct BandwidthSpec {
  std::optional<double> h_u;   ///< empty: normal-reference rule on Û
  std::vector<double> h_x;     ///< empty: normal-reference rule per covariate
  std::optional<double> b;     ///< empty: b_scale · n^{b_exponent}
  double b_scale = 0.1;
  double b_exponent = -0.2;
};

/// What to do when |∂F̂/∂x₁| falls below the floor (or changes sign) on the
/// integration path of a covariate node.
enum class DenominatorPolicy {
  Exclude,  ///< drop the node from Q̂(u) for u beyond the failure point
  Error,    ///< raise VanishingDenominator
};

struct NptConfig {
  bool paper_exact_kernel = false;
  KernelKind median_kernel = KernelKind::Cauchy;
  BandwidthSpec bandwidth;
  std::size_t n_x = 100;
  std::size_t n_u = 201;
  std::vector<Interval> v_support;  ///< empty: central quantile range, see v_trim
  double v_trim = 0.1;              ///< fraction cut from each side in auto mode
  VWeightKind v_kind = VWeightKind::Smooth;
  double anchor_a = 0.0;
  double anchor_b = 1.0;
  std::size_t quad_points = 3;      ///< Gauss–Legendre points per u-grid cell
  double denominator_floor = 1e-8;  ///< on |∂F̂/∂x₁|
  double s1_floor = 1e-8;           ///< on |ŝ₁(1, x)|
  DenominatorPolicy denominator_policy = DenominatorPolicy::Exclude;
  std::optional<Interval> y_window; ///< weight support 𝒴_w; empty: observed y-range

  /// Throws InvalidConfig or GridTooCoarse.
  void validate() const;
};

/// F̂_{U|X}(u|x) and its partial derivatives for fixed Û and bandwidths.
class ConditionalCdf {
 public:
  ConditionalCdf(const Dataset& data, std::vector<double> u_hat, double h_u,
                 std::vector<double> h_x, Kernel kernel);

  struct Value {
    double cdf;    ///< F̂
    double d_u;    ///< ∂F̂/∂u
    double d_x1;   ///< ∂F̂/∂x₁
  };

  /// Throws EmptyNeighborhood when no observation has positive kernel weight.
  [[nodiscard]] Value evaluate(double u, std::span<const double> x) const;
  [[nodiscard]] double cdf(double u, std::span<const double> x) const {
    return evaluate(u, x).cdf;
  }
  /// ŝ₁(u, x) = ∫₀ᵘ (∂F̂/∂r)/(∂F̂/∂x₁) dr by adaptive Gauss–Kronrod.
  ///
  /// Throws VanishingDenominator if |∂F̂/∂x₁| drops below `floor` or changes
  /// sign along the path.
  [[nodiscard]] double s1(double u, std::span<const double> x, double floor = 1e-8) const;

  [[nodiscard]] const Kernel& kernel() const noexcept { return kernel_; }
  [[nodiscard]] double h_u() const noexcept { return h_u_; }
  [[nodiscard]] const std::vector<double>& h_x() const noexcept { return h_x_; }

 private:
  const Dataset* data_;
  std::vector<double> u_hat_;
  double h_u_;
  std::vector<double> h_x_;
  Kernel kernel_;
};

/// Minimizer over q of Σ_k w_k·(ρ_k − q)(2L((ρ_k − q)/b) − 1).
[[nodiscard]] double smoothed_median(std::span<const double> rho,
                                     std::span<const double> weights,
                                     const SmoothedSign& sign,
                                     std::optional<double> start = std::nullopt);

/// Everything estimate_h derives from the data before solving for Q̂.
struct NptContext {
  EmpiricalRescale t_hat;
  std::vector<double> u_hat;
  BandwidthSet bandwidths;
  Kernel kernel;
  SmoothedSign sign;
  VWeight v;
  std::vector<double> x_nodes;    ///< row-major, n_nodes × d
  std::vector<double> x_weights;  ///< sums to one
  Interval y_window;
  std::size_t dx = 1;

  [[nodiscard]] std::size_t n_nodes() const noexcept { return x_weights.size(); }
  [[nodiscard]] std::span<const double> node(std::size_t k) const noexcept {
    return {x_nodes.data() + k * dx, dx};
  }
};

[[nodiscard]] NptContext make_context(const Dataset& data, const NptConfig& config);

/// Q̂(u) through the adaptive ŝ₁ path (reference implementation).
[[nodiscard]] double q_hat(double u, const Dataset& data, const NptConfig& config);
[[nodiscard]] double q_hat(double u, const Dataset& data, const NptContext& context,
                           const NptConfig& config);

/// Pool-adjacent-violators projection onto nondecreasing sequences.
[[nodiscard]] std::vector<double> isotonic_projection(std::span<const double> values);

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  /// Linear extrapolation with the end slopes outside the knot range.
  [[nodiscard]] double operator()(double t) const noexcept;
  [[nodiscard]] const std::vector<double>& knots() const noexcept { return x_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return y_; }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> d_;
};

/// ĥ = Q̂ ∘ T̂ on a u-grid.
class NptEstimate {
 public:
  NptEstimate() = default;
  NptEstimate(EmpiricalRescale t_hat, std::vector<double> u_grid, std::vector<double> q_raw,
              BandwidthSet bandwidths, Interval y_window);

  [[nodiscard]] double eval(double y) const noexcept { return q_interp_(t_hat_(y)); }
  [[nodiscard]] double operator()(double y) const noexcept { return eval(y); }
  [[nodiscard]] double eval_u(double u) const noexcept { return q_interp_(u); }
  [[nodiscard]] std::vector<double> eval(std::span<const double> ys) const;

  [[nodiscard]] const std::vector<double>& u_grid() const noexcept { return u_grid_; }
  [[nodiscard]] const std::vector<double>& q_raw() const noexcept { return q_raw_; }
  [[nodiscard]] const std::vector<double>& q_values() const noexcept { return q_values_; }
  [[nodiscard]] const EmpiricalRescale& t_hat() const noexcept { return t_hat_; }
  [[nodiscard]] const BandwidthSet& bandwidths() const noexcept { return bandwidths_; }
  [[nodiscard]] Interval y_window() const noexcept { return y_window_; }
  /// Number of grid nodes changed by the isotonic projection.
  [[nodiscard]] std::size_t isotonic_adjustments() const noexcept { return adjusted_; }
  /// (grid node, covariate node) pairs left out of Q̂ by the denominator policy.
  [[nodiscard]] std::size_t excluded_pairs() const noexcept { return excluded_; }
  void set_excluded_pairs(std::size_t count) noexcept { excluded_ = count; }

 private:
  EmpiricalRescale t_hat_;
  std::vector<double> u_grid_;
  std::vector<double> q_raw_;
  std::vector<double> q_values_;
  MonotoneCubic q_interp_;
  BandwidthSet bandwidths_;
  Interval y_window_;
  std::size_t adjusted_ = 0;
  std::size_t excluded_ = 0;
};

/// Full estimator. Uses a batched evaluation of ŝ₁ on the u-grid with
/// composite Gauss–Legendre integration between grid nodes.
[[nodiscard]] NptEstimate estimate_h(const Dataset& data, const NptConfig& config);

}  // namespace transpec
