#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "transpec/errors.hpp"

namespace transpec {

/// Nodes and weights of a fixed quadrature rule.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
};

/// n-point Gauss–Legendre rule on [-1, 1].
[[nodiscard]] const Rule& gauss_legendre(std::size_t n);

/// Gauss–Legendre rule with `points` nodes on each of `panels` equal panels of [a, b].
[[nodiscard]] Rule composite_gauss_legendre(double a, double b, std::size_t panels,
                                            std::size_t points);

/// Gauss–Legendre rule with `points` nodes on each interval between consecutive breaks.
[[nodiscard]] Rule piecewise_gauss_legendre(const std::vector<double>& breaks,
                                            std::size_t points);

/// n-cell midpoint rule on [a, b].
[[nodiscard]] Rule midpoint_rule(double a, double b, std::size_t n);

/// Adaptive 15-point Gauss–Kronrod integration of f over [a, b].
///
/// Throws QuadratureFailure when the final error estimate exceeds ten times
/// max(abs_tol, rel_tol * |I|).
template <class F>
double integrate_adaptive(F&& f, double a, double b, double abs_tol = 1e-10,
                          double rel_tol = 1e-8, const char* what = "integral") {
  if (a == b) return 0.0;
  double err = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 15, rel_tol, &err, &l1);
  if (!std::isfinite(value) || err > 10.0 * std::max(abs_tol, rel_tol * std::abs(value))) {
    fail(ErrorKind::QuadratureFailure,
         std::string(what) + ": adaptive quadrature did not converge (error " +
             std::to_string(err) + ")");
  }
  return value;
}

}  // namespace transpec
