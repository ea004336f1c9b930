#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace transpec {

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  [[nodiscard]] double length() const noexcept { return hi - lo; }
  [[nodiscard]] double clamp(double v) const noexcept {
    return v < lo ? lo : (v > hi ? hi : v);
  }
  bool operator==(const Interval&) const = default;
};

using Theta = std::vector<double>;

/// A class {Λ_θ : θ ∈ Θ} of strictly increasing transformations.
///
/// Implementations must be stateless and thread-safe.
class ParametricFamily {
 public:
  virtual ~ParametricFamily() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual std::size_t theta_dim() const = 0;
  [[nodiscard]] virtual std::vector<Interval> theta_box() const = 0;

  [[nodiscard]] virtual double eval(std::span<const double> theta, double y) const = 0;
  /// Writes ∂Λ_θ(y)/∂θ_k into out[k].
  virtual void grad_theta(std::span<const double> theta, double y,
                          std::span<double> out) const = 0;
  /// Writes ∂²Λ_θ(y)/∂θ_k∂θ_l into out[k * dim + l].
  virtual void hess_theta(std::span<const double> theta, double y,
                          std::span<double> out) const = 0;
  /// dΛ_θ(y)/dy. The default uses a central difference.
  [[nodiscard]] virtual double deriv_y(std::span<const double> theta, double y) const;
  /// Closed-form inverse of y ↦ Λ_θ(y), if the family has one.
  [[nodiscard]] virtual std::optional<double> inverse(std::span<const double> theta,
                                                      double value) const;
};

using FamilyPtr = std::shared_ptr<const ParametricFamily>;

// Yeo–Johnson on θ ∈ [0, 2].
[[nodiscard]] double yeo_johnson_eval(double theta, double y) noexcept;
[[nodiscard]] double yeo_johnson_grad(double theta, double y) noexcept;
[[nodiscard]] double yeo_johnson_hess(double theta, double y) noexcept;
[[nodiscard]] double yeo_johnson_deriv_y(double theta, double y) noexcept;
[[nodiscard]] double yeo_johnson_inverse(double theta, double value) noexcept;

class YeoJohnson final : public ParametricFamily {
 public:
  [[nodiscard]] std::string name() const override { return "yeo-johnson"; }
  [[nodiscard]] std::size_t theta_dim() const override { return 1; }
  [[nodiscard]] std::vector<Interval> theta_box() const override { return {{0.0, 2.0}}; }
  [[nodiscard]] double eval(std::span<const double> theta, double y) const override {
    return yeo_johnson_eval(theta[0], y);
  }
  void grad_theta(std::span<const double> theta, double y,
                  std::span<double> out) const override {
    out[0] = yeo_johnson_grad(theta[0], y);
  }
  void hess_theta(std::span<const double> theta, double y,
                  std::span<double> out) const override {
    out[0] = yeo_johnson_hess(theta[0], y);
  }
  [[nodiscard]] double deriv_y(std::span<const double> theta, double y) const override {
    return yeo_johnson_deriv_y(theta[0], y);
  }
  [[nodiscard]] std::optional<double> inverse(std::span<const double> theta,
                                              double value) const override {
    return yeo_johnson_inverse(theta[0], value);
  }
};

using FamilyFactory = std::function<FamilyPtr()>;

/// Registers a family under `name`, replacing any previous registration.
void register_family(const std::string& name, FamilyFactory factory);
/// Looks up a family by registry name; throws InvalidConfig if unknown.
[[nodiscard]] FamilyPtr make_family(const std::string& name);
[[nodiscard]] std::vector<std::string> registered_families();

struct InvertOptions {
  double tolerance = 1e-10;    ///< on |f(y) − target| / (1 + |target|)
  double max_abs = 1e12;       ///< bracket expansion bound
  int max_iterations = 400;
};

/// Solves f(y) = target for increasing f, expanding the bracket geometrically.
///
/// Throws BracketExhausted when the target is not reached before the bracket
/// endpoints exceed `max_abs` in magnitude.
[[nodiscard]] double invert_monotone(const std::function<double(double)>& f, double target,
                                     Interval bracket, const InvertOptions& options = {});

/// h_θ(y) = (Λ_θ(y) − Λ_θ(0)) / (Λ_θ(1) − Λ_θ(0)).
class NormalizedTransform {
 public:
  NormalizedTransform(FamilyPtr family, Theta theta);

  [[nodiscard]] double operator()(double y) const { return eval(y); }
  [[nodiscard]] double eval(double y) const;
  [[nodiscard]] double deriv(double y) const;
  [[nodiscard]] double inverse(double value) const;

  [[nodiscard]] const ParametricFamily& family() const noexcept { return *family_; }
  [[nodiscard]] const FamilyPtr& family_ptr() const noexcept { return family_; }
  [[nodiscard]] const Theta& theta() const noexcept { return theta_; }
  [[nodiscard]] double scale() const noexcept { return scale_; }
  [[nodiscard]] double shift() const noexcept { return shift_; }

 private:
  FamilyPtr family_;
  Theta theta_;
  double scale_ = 1.0;
  double shift_ = 0.0;
};

/// Throws DegenerateScale if Λ_θ(1) − Λ_θ(0) < 1e-12.
[[nodiscard]] NormalizedTransform normalize(FamilyPtr family, Theta theta);

}  // namespace transpec
