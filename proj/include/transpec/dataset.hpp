#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "transpec/transform_family.hpp"

namespace transpec {

/// n observations (X_i ∈ ℝ^d, Y_i ∈ ℝ). Covariates are stored row-major.
class Dataset {
 public:
  Dataset() = default;
  /// Throws InvalidConfig on size mismatch or non-finite entries.
  Dataset(std::vector<double> y, std::vector<double> x, std::size_t dx);

  [[nodiscard]] static Dataset univariate(std::vector<double> x, std::vector<double> y) {
    return Dataset(std::move(y), std::move(x), 1);
  }

  [[nodiscard]] std::size_t n() const noexcept { return y_.size(); }
  [[nodiscard]] std::size_t dx() const noexcept { return dx_; }
  [[nodiscard]] double y(std::size_t i) const noexcept { return y_[i]; }
  [[nodiscard]] double x(std::size_t i, std::size_t k = 0) const noexcept {
    return x_[i * dx_ + k];
  }
  [[nodiscard]] std::span<const double> x_row(std::size_t i) const noexcept {
    return {x_.data() + i * dx_, dx_};
  }
  [[nodiscard]] const std::vector<double>& ys() const noexcept { return y_; }
  [[nodiscard]] const std::vector<double>& xs() const noexcept { return x_; }
  /// Values of covariate k for all observations.
  [[nodiscard]] std::vector<double> x_column(std::size_t k) const;
  [[nodiscard]] Interval y_range() const;
  [[nodiscard]] Interval x_range(std::size_t k) const;
  /// Observations [begin, end) in input order.
  [[nodiscard]] Dataset slice(std::size_t begin, std::size_t end) const;
  [[nodiscard]] Dataset permuted(const std::vector<std::size_t>& order) const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<double> y_;
  std::vector<double> x_;
  std::size_t dx_ = 1;
};

}  // namespace transpec
