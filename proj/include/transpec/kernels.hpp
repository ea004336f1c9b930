#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace transpec {

enum class KernelKind {
  Biweight,       ///< 15/16 (1 − y²)² on [−1, 1]
  PaperBiweight,  ///< 3/4 (1 − y²)² on [−1, 1]; integrates to 4/5
  Uniform,        ///< 1/2 on [−1, 1]
  Gaussian,       ///< standard normal density
  Cauchy,         ///< standard Cauchy density
};

/// A univariate kernel with its derivative and cumulative integral.
class Kernel {
 public:
  constexpr explicit Kernel(KernelKind kind = KernelKind::Biweight) noexcept : kind_(kind) {}

  [[nodiscard]] KernelKind kind() const noexcept { return kind_; }
  [[nodiscard]] double eval(double y) const noexcept;
  [[nodiscard]] double deriv(double y) const noexcept;
  /// ∫_{−∞}^{y} eval.
  [[nodiscard]] double integral(double y) const noexcept;
  /// Half-width of the support; infinity for unbounded kernels.
  [[nodiscard]] double support_radius() const noexcept;
  [[nodiscard]] bool compact() const noexcept {
    return support_radius() < std::numeric_limits<double>::infinity();
  }
  [[nodiscard]] std::string name() const;

 private:
  KernelKind kind_;
};

/// Normalized biweight, or the unnormalized 3/4 variant when `paper_exact`.
[[nodiscard]] Kernel biweight_kernel(bool paper_exact = false) noexcept;

enum class SmoothingKind { Gaussian, Uniform };
[[nodiscard]] Kernel smoothing_distribution(SmoothingKind kind) noexcept;

/// K(u/h)/h.
[[nodiscard]] inline double scaled_kernel_eval(const Kernel& k, double h, double u) noexcept {
  return k.eval(u / h) / h;
}
/// ∫_{−∞}^{u/h} K.
[[nodiscard]] inline double scaled_kernel_integral(const Kernel& k, double h, double u) noexcept {
  return k.integral(u / h);
}

/// (40√π / n)^{1/5} · σ̂ with σ̂ the sample standard deviation (divisor n − 1).
///
/// Throws ZeroVariance when all values coincide and InvalidConfig for n < 2.
[[nodiscard]] double normal_reference_bandwidth(std::span<const double> values);

/// Smoothed sign z ↦ 2·L((z)/b) − 1 with L the CDF of `k`, and its first two
/// z-derivatives. Used by the smoothed-median objective.
struct SmoothedSign {
  Kernel kernel{KernelKind::Cauchy};
  double b = 0.01;

  [[nodiscard]] double sign(double z) const noexcept {
    return 2.0 * kernel.integral(z / b) - 1.0;
  }
  /// z·(2L(z/b) − 1), the smoothed absolute value.
  [[nodiscard]] double abs(double z) const noexcept { return z * sign(z); }
  /// d/dz of abs(z).
  [[nodiscard]] double abs_d1(double z) const noexcept {
    return sign(z) + 2.0 * (z / b) * kernel.eval(z / b);
  }
  /// d²/dz² of abs(z).
  [[nodiscard]] double abs_d2(double z) const noexcept {
    const double t = z / b;
    return (4.0 * kernel.eval(t) + 2.0 * t * kernel.deriv(t)) / b;
  }
};

/// All bandwidths used by one estimation run.
struct BandwidthSet {
  double h_u = 0.0;
  std::vector<double> h_x;
  double b = 0.0;
  double a_n = 0.1;
  double b_n = 0.1;
};

}  // namespace transpec
