#include "transpec/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "transpec/errors.hpp"

namespace transpec {

Dataset::Dataset(std::vector<double> y, std::vector<double> x, std::size_t dx)
    : y_(std::move(y)), x_(std::move(x)), dx_(dx) {
  if (dx_ == 0) fail(ErrorKind::InvalidConfig, "dataset needs at least one covariate");
  if (x_.size() != y_.size() * dx_)
    fail(ErrorKind::InvalidConfig, "dataset: covariate matrix does not match response count");
  for (double v : y_)
    if (!std::isfinite(v)) fail(ErrorKind::InvalidConfig, "dataset: non-finite response");
  for (double v : x_)
    if (!std::isfinite(v)) fail(ErrorKind::InvalidConfig, "dataset: non-finite covariate");
}

std::vector<double> Dataset::x_column(std::size_t k) const {
  std::vector<double> out(n());
  for (std::size_t i = 0; i < n(); ++i) out[i] = x(i, k);
  return out;
}

Interval Dataset::y_range() const {
  if (y_.empty()) return {};
  auto [lo, hi] = std::minmax_element(y_.begin(), y_.end());
  return {*lo, *hi};
}

Interval Dataset::x_range(std::size_t k) const {
  if (y_.empty()) return {};
  Interval r{x(0, k), x(0, k)};
  for (std::size_t i = 1; i < n(); ++i) {
    r.lo = std::min(r.lo, x(i, k));
    r.hi = std::max(r.hi, x(i, k));
  }
  return r;
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  Dataset out;
  out.dx_ = dx_;
  out.y_.assign(y_.begin() + static_cast<std::ptrdiff_t>(begin),
                y_.begin() + static_cast<std::ptrdiff_t>(end));
  out.x_.assign(x_.begin() + static_cast<std::ptrdiff_t>(begin * dx_),
                x_.begin() + static_cast<std::ptrdiff_t>(end * dx_));
  return out;
}

Dataset Dataset::permuted(const std::vector<std::size_t>& order) const {
  Dataset out;
  out.dx_ = dx_;
  out.y_.reserve(order.size());
  out.x_.reserve(order.size() * dx_);
  for (std::size_t i : order) {
    out.y_.push_back(y_[i]);
    for (std::size_t k = 0; k < dx_; ++k) out.x_.push_back(x(i, k));
  }
  return out;
}

}  // namespace transpec
