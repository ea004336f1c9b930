#include "transpec/kernels.hpp"

#include <cmath>
#include <numbers>

#include "transpec/errors.hpp"

namespace transpec {

namespace {

double phi(double y) noexcept {
  return std::exp(-0.5 * y * y) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double biweight_cdf01(double y) noexcept {
  // ∫_{−1}^{y} (15/16)(1 − t²)² dt
  if (y <= -1.0) return 0.0;
  if (y >= 1.0) return 1.0;
  const double y2 = y * y;
  return 0.5 + (15.0 / 16.0) * y * (1.0 - (2.0 / 3.0) * y2 + 0.2 * y2 * y2);
}

}  // namespace

double Kernel::eval(double y) const noexcept {
  switch (kind_) {
    case KernelKind::Biweight:
    case KernelKind::PaperBiweight: {
      if (y <= -1.0 || y >= 1.0) return 0.0;
      const double s = 1.0 - y * y;
      return (kind_ == KernelKind::Biweight ? 15.0 / 16.0 : 0.75) * s * s;
    }
    case KernelKind::Uniform:
      return (y >= -1.0 && y <= 1.0) ? 0.5 : 0.0;
    case KernelKind::Gaussian:
      return phi(y);
    case KernelKind::Cauchy:
      return std::numbers::inv_pi / (1.0 + y * y);
  }
  return 0.0;
}

double Kernel::deriv(double y) const noexcept {
  switch (kind_) {
    case KernelKind::Biweight:
    case KernelKind::PaperBiweight: {
      if (y <= -1.0 || y >= 1.0) return 0.0;
      return (kind_ == KernelKind::Biweight ? 15.0 / 16.0 : 0.75) * (-4.0 * y * (1.0 - y * y));
    }
    case KernelKind::Uniform:
      return 0.0;
    case KernelKind::Gaussian:
      return -y * phi(y);
    case KernelKind::Cauchy: {
      const double d = 1.0 + y * y;
      return -2.0 * y * std::numbers::inv_pi / (d * d);
    }
  }
  return 0.0;
}

double Kernel::integral(double y) const noexcept {
  switch (kind_) {
    case KernelKind::Biweight:
      return biweight_cdf01(y);
    case KernelKind::PaperBiweight:
      return 0.8 * biweight_cdf01(y);
    case KernelKind::Uniform:
      if (y <= -1.0) return 0.0;
      if (y >= 1.0) return 1.0;
      return 0.5 * (y + 1.0);
    case KernelKind::Gaussian:
      return 0.5 * std::erfc(-y * std::numbers::sqrt2 * 0.5);
    case KernelKind::Cauchy:
      return 0.5 + std::atan(y) * std::numbers::inv_pi;
  }
  return 0.0;
}

double Kernel::support_radius() const noexcept {
  switch (kind_) {
    case KernelKind::Biweight:
    case KernelKind::PaperBiweight:
    case KernelKind::Uniform:
      return 1.0;
    case KernelKind::Gaussian:
    case KernelKind::Cauchy:
      return std::numeric_limits<double>::infinity();
  }
  return 1.0;
}

std::string Kernel::name() const {
  switch (kind_) {
    case KernelKind::Biweight: return "biweight";
    case KernelKind::PaperBiweight: return "paper-exact";
    case KernelKind::Uniform: return "uniform";
    case KernelKind::Gaussian: return "gaussian";
    case KernelKind::Cauchy: return "cauchy";
  }
  return "unknown";
}

Kernel biweight_kernel(bool paper_exact) noexcept {
  return Kernel(paper_exact ? KernelKind::PaperBiweight : KernelKind::Biweight);
}

Kernel smoothing_distribution(SmoothingKind kind) noexcept {
  return Kernel(kind == SmoothingKind::Gaussian ? KernelKind::Gaussian : KernelKind::Uniform);
}

double normal_reference_bandwidth(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) fail(ErrorKind::InvalidConfig, "normal reference bandwidth needs n >= 2");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 1e-14 * (1.0 + std::abs(mean))))
    fail(ErrorKind::ZeroVariance, "normal reference bandwidth: sample has zero variance");
  return std::pow(40.0 * std::sqrt(std::numbers::pi) / static_cast<double>(n), 0.2) * sd;
}

}  // namespace transpec
