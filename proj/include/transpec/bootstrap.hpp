#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "transpec/dataset.hpp"
#include "transpec/kernels.hpp"
#include "transpec/npt_estimator.hpp"
#include "transpec/test_statistic.hpp"
#include "transpec/transform_family.hpp"

namespace transpec {

enum class RegressionMethod {
  NadarayaWatson,
  LocalLinear,  ///< falls back to Nadaraya–Watson where the local design is singular
};

struct BootstrapConfig {
  std::size_t m = 100;
  std::size_t B = 250;
  double a_n = 0.1;  ///< residual smoothing
  double b_n = 0.1;  ///< covariate smoothing
  SmoothingKind kappa = SmoothingKind::Uniform;
  SmoothingKind ell = SmoothingKind::Gaussian;
  std::uint64_t seed = 0;
  std::optional<double> g_bandwidth;  ///< empty: normal-reference rule per covariate
  RegressionMethod g_method = RegressionMethod::LocalLinear;
  /// h* is linear outside [min Y − e·range, max Y + e·range].
  double extension = 1.0;
  double max_failure_fraction = 0.2;

  void validate() const;
};

/// Kernel regression with the estimator kernel. Nadaraya–Watson clamps its
/// argument coordinatewise to the observed covariate range; local-linear
/// evaluates the local fit at the argument itself.
class RegressionFn {
 public:
  RegressionFn() = default;
  RegressionFn(const Dataset& data, std::vector<double> responses, std::vector<double> bandwidths,
               Kernel kernel, RegressionMethod method = RegressionMethod::NadarayaWatson);

  /// Throws EmptyNeighborhood if no observation has positive weight.
  [[nodiscard]] double operator()(std::span<const double> x) const;
  [[nodiscard]] double operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }
  [[nodiscard]] const std::vector<double>& bandwidths() const noexcept { return h_; }
  [[nodiscard]] RegressionMethod method() const noexcept { return method_; }

 private:
  [[nodiscard]] double nadaraya_watson(std::span<const double> x) const;

  std::vector<double> x_;
  std::vector<double> r_;
  std::vector<double> h_;
  std::vector<Interval> hull_;
  std::size_t dx_ = 1;
  Kernel kernel_;
  RegressionMethod method_ = RegressionMethod::NadarayaWatson;
};

/// ĝ(x) estimating E[h_θ̂(Y) | X = x].
[[nodiscard]] RegressionFn estimate_g(const Dataset& data, const NormalizedTransform& h_theta,
                                      std::optional<double> bandwidth = std::nullopt,
                                      bool paper_exact_kernel = false,
                                      RegressionMethod method = RegressionMethod::NadarayaWatson);

/// Centered residuals h_θ̂(Yᵢ) − ĝ(Xᵢ).
[[nodiscard]] std::vector<double> residuals(const Dataset& data, const NormalizedTransform& h_theta,
                                            const RegressionFn& g_hat);

/// h* on a window, continued linearly with the boundary slopes outside it.
class ExtendedTransform {
 public:
  ExtendedTransform(NormalizedTransform h, Interval window);

  [[nodiscard]] double eval(double y) const;
  /// Sets *extended when the value falls outside h*(window).
  [[nodiscard]] double inverse(double s, bool* extended = nullptr) const;
  [[nodiscard]] const NormalizedTransform& base() const noexcept { return h_; }
  [[nodiscard]] Interval window() const noexcept { return window_; }

 private:
  NormalizedTransform h_;
  Interval window_;
  double v_lo_, v_hi_, d_lo_, d_hi_;
};

struct BootstrapDraw {
  Dataset data;
  std::size_t extended = 0;  ///< Y* obtained on the linear extension
};

[[nodiscard]] BootstrapDraw draw_bootstrap_sample(const Dataset& data, const ExtendedTransform& h_star,
                                                  const RegressionFn& g_hat,
                                                  std::span<const double> eps_tilde,
                                                  const BootstrapConfig& config,
                                                  std::uint64_t replicate);

/// T*: the full estimate_h + compute_Tn pipeline on a bootstrap sample, with
/// the weight rebuilt from that sample.
[[nodiscard]] TnResult bootstrap_statistic(const Dataset& star, const ParametricFamily& family,
                                           const NptConfig& npt, const TestConfig& test);

/// min{z ∈ stats : #{stats ≤ z}/B ≥ α}.
[[nodiscard]] double bootstrap_quantile(std::span<const double> stats, double alpha);

struct GofConfig {
  NptConfig npt;
  TestConfig test;
  BootstrapConfig bootstrap;
  std::vector<double> alphas{0.05, 0.10};
  std::size_t workers = 1;
};

struct GofDiagnostics {
  std::size_t failed = 0;          ///< replications dropped after an estimator error
  std::size_t anchor_drops = 0;    ///< replications whose Y* range misses 0 or 1
  std::size_t extended = 0;        ///< Y* values taken from the h* extension
  std::size_t stalls = 0;          ///< optimizer warnings over all replications
  bool stalled = false;            ///< optimizer warning on the original data
  std::size_t isotonic_adjustments = 0;
  std::size_t excluded_pairs = 0;
  double g_bandwidth = 0.0;
};

struct GofReport {
  double t_n = 0.0;
  GammaPoint gamma_hat;
  std::vector<double> alphas;
  std::vector<double> quantiles;  ///< q̂*_{1−α}
  std::vector<bool> reject;
  double p_star = 0.0;
  std::size_t b_used = 0;
  std::size_t m_used = 0;
  std::vector<double> statistics;  ///< successful T* values, by replicate index
  BandwidthSet bandwidths;
  GofDiagnostics diagnostics;
};

[[nodiscard]] GofReport gof_test(const Dataset& data, const FamilyPtr& family, const GofConfig& config);

}  // namespace transpec
