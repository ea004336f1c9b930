#include "transpec/transform_family.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "transpec/errors.hpp"

namespace transpec {

namespace {

// For a = t·L the three maps below are expm1(a)/t and its first two
// t-derivatives. Near a = 0 they are evaluated from their power series.
constexpr double kSeriesCutoff = 0.05;

double expm1_ratio(double t, double L) noexcept {
  const double a = t * L;
  if (std::abs(a) < kSeriesCutoff) {
    // L·Σ a^j/(j+1)!
    return L * (1.0 + a * (1.0 / 2 + a * (1.0 / 6 + a * (1.0 / 24 + a * (1.0 / 120 +
                a * (1.0 / 720 + a * (1.0 / 5040 + a / 40320)))))));
  }
  return std::expm1(a) / t;
}

double expm1_ratio_d1(double t, double L) noexcept {
  const double a = t * L;
  if (std::abs(a) < kSeriesCutoff) {
    // L²·Σ (j+1) a^j/(j+2)!
    return L * L * (1.0 / 2 + a * (1.0 / 3 + a * (1.0 / 8 + a * (1.0 / 30 +
                    a * (1.0 / 144 + a * (1.0 / 840 + a / 5760))))));
  }
  const double e = std::exp(a);
  return (a * e - std::expm1(a)) / (t * t);
}

double expm1_ratio_d2(double t, double L) noexcept {
  const double a = t * L;
  if (std::abs(a) < kSeriesCutoff) {
    // L³·Σ (j+1)(j+2) a^j/(j+3)!
    return L * L * L * (1.0 / 3 + a * (1.0 / 4 + a * (1.0 / 10 + a * (1.0 / 36 +
                        a * (1.0 / 168 + a * (1.0 / 960 + a / 6480))))));
  }
  const double e = std::exp(a);
  return (a * a * e - 2.0 * a * e + 2.0 * std::expm1(a)) / (t * t * t);
}

}  // namespace

double yeo_johnson_eval(double theta, double y) noexcept {
  if (theta == 1.0) return y;
  if (y >= 0.0) return expm1_ratio(theta, std::log1p(y));
  return -expm1_ratio(2.0 - theta, std::log1p(-y));
}

double yeo_johnson_grad(double theta, double y) noexcept {
  if (y >= 0.0) return expm1_ratio_d1(theta, std::log1p(y));
  return expm1_ratio_d1(2.0 - theta, std::log1p(-y));
}

double yeo_johnson_hess(double theta, double y) noexcept {
  if (y >= 0.0) return expm1_ratio_d2(theta, std::log1p(y));
  return -expm1_ratio_d2(2.0 - theta, std::log1p(-y));
}

double yeo_johnson_deriv_y(double theta, double y) noexcept {
  if (y >= 0.0) return std::exp((theta - 1.0) * std::log1p(y));
  return std::exp((1.0 - theta) * std::log1p(-y));
}

double yeo_johnson_inverse(double theta, double value) noexcept {
  if (theta == 1.0) return value;
  if (value >= 0.0) {
    if (theta == 0.0) return std::expm1(value);
    return std::expm1(std::log1p(theta * value) / theta);
  }
  const double beta = 2.0 - theta;
  if (beta == 0.0) return -std::expm1(-value);
  return -std::expm1(std::log1p(-beta * value) / beta);
}

double ParametricFamily::deriv_y(std::span<const double> theta, double y) const {
  const double step = 1e-6 * (1.0 + std::abs(y));
  return (eval(theta, y + step) - eval(theta, y - step)) / (2.0 * step);
}

std::optional<double> ParametricFamily::inverse(std::span<const double>, double) const {
  return std::nullopt;
}

namespace {

struct Registry {
  std::mutex mu;
  std::map<std::string, FamilyFactory> factories;

  Registry() {
    factories["yeo-johnson"] = [] { return std::make_shared<const YeoJohnson>(); };
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_family(const std::string& name, FamilyFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  r.factories[name] = std::move(factory);
}

FamilyPtr make_family(const std::string& name) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  auto it = r.factories.find(name);
  if (it == r.factories.end()) fail(ErrorKind::InvalidConfig, "unknown family '" + name + "'");
  return it->second();
}

std::vector<std::string> registered_families() {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  std::vector<std::string> names;
  for (const auto& [name, _] : r.factories) names.push_back(name);
  return names;
}

double invert_monotone(const std::function<double(double)>& f, double target,
                       Interval bracket, const InvertOptions& options) {
  const double tol = options.tolerance * (1.0 + std::abs(target));
  double lo = bracket.lo;
  double hi = bracket.hi;
  if (!(lo < hi)) fail(ErrorKind::Internal, "invert_monotone: empty bracket");
  double flo = f(lo) - target;
  double fhi = f(hi) - target;
  double width = hi - lo;
  while (flo > 0.0) {
    hi = lo;
    fhi = flo;
    lo -= width;
    width *= 2.0;
    if (std::abs(lo) > options.max_abs)
      fail(ErrorKind::BracketExhausted, "invert_monotone: target below reachable range");
    flo = f(lo) - target;
  }
  while (fhi < 0.0) {
    lo = hi;
    flo = fhi;
    hi += width;
    width *= 2.0;
    if (std::abs(hi) > options.max_abs)
      fail(ErrorKind::BracketExhausted, "invert_monotone: target above reachable range");
    fhi = f(hi) - target;
  }
  if (std::abs(flo) <= tol) return lo;
  if (std::abs(fhi) <= tol) return hi;

  // Illinois false position, with a bisection step whenever the bracket
  // fails to shrink by half over two iterations.
  int side = 0;
  double last_width = hi - lo;
  for (int it = 0; it < options.max_iterations; ++it) {
    double mid;
    if (it % 2 == 1 && (hi - lo) > 0.5 * last_width) {
      mid = 0.5 * (lo + hi);
    } else {
      mid = (lo * fhi - hi * flo) / (fhi - flo);
      if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    }
    if (it % 2 == 1) last_width = hi - lo;
    const double fm = f(mid) - target;
    if (std::abs(fm) <= tol) return mid;
    if (fm < 0.0) {
      lo = mid;
      flo = fm;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = mid;
      fhi = fm;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
    if (hi - lo <= 4e-16 * (1.0 + std::abs(mid))) return mid;
  }
  return 0.5 * (lo + hi);
}

NormalizedTransform::NormalizedTransform(FamilyPtr family, Theta theta)
    : family_(std::move(family)), theta_(std::move(theta)) {
  if (!family_) fail(ErrorKind::Internal, "NormalizedTransform: null family");
  if (theta_.size() != family_->theta_dim())
    fail(ErrorKind::InvalidConfig, "NormalizedTransform: theta dimension mismatch");
  shift_ = family_->eval(theta_, 0.0);
  scale_ = family_->eval(theta_, 1.0) - shift_;
  if (!(scale_ >= 1e-12))
    fail(ErrorKind::DegenerateScale, "Lambda(1) - Lambda(0) is not positive");
}

double NormalizedTransform::eval(double y) const {
  return (family_->eval(theta_, y) - shift_) / scale_;
}

double NormalizedTransform::deriv(double y) const {
  return family_->deriv_y(theta_, y) / scale_;
}

double NormalizedTransform::inverse(double value) const {
  const double target = value * scale_ + shift_;
  if (auto y = family_->inverse(theta_, target)) return *y;
  return invert_monotone([this](double y) { return family_->eval(theta_, y); }, target,
                         {-1.0, 2.0});
}

NormalizedTransform normalize(FamilyPtr family, Theta theta) {
  return NormalizedTransform(std::move(family), std::move(theta));
}

}  // namespace transpec
