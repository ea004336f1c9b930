#include "transpec/quadrature.hpp"

#include <map>
#include <mutex>
#include <numbers>

namespace transpec {

namespace {

Rule compute_gauss_legendre(std::size_t n) {
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0;
    double p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const Rule& gauss_legendre(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, Rule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) {
    if (n == 0) fail(ErrorKind::InvalidConfig, "Gauss-Legendre rule needs at least one node");
    Rule r = n == 1 ? Rule{{0.0}, {2.0}} : compute_gauss_legendre(n);
    it = cache.emplace(n, std::move(r)).first;
  }
  return it->second;
}

Rule piecewise_gauss_legendre(const std::vector<double>& breaks, std::size_t points) {
  const Rule& base = gauss_legendre(points);
  Rule out;
  if (breaks.size() < 2) return out;
  out.nodes.reserve((breaks.size() - 1) * points);
  out.weights.reserve((breaks.size() - 1) * points);
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double half = 0.5 * (breaks[p + 1] - breaks[p]);
    const double mid = 0.5 * (breaks[p + 1] + breaks[p]);
    if (half <= 0.0) continue;
    for (std::size_t k = 0; k < points; ++k) {
      out.nodes.push_back(mid + half * base.nodes[k]);
      out.weights.push_back(half * base.weights[k]);
    }
  }
  return out;
}

Rule composite_gauss_legendre(double a, double b, std::size_t panels, std::size_t points) {
  std::vector<double> breaks(panels + 1);
  for (std::size_t p = 0; p <= panels; ++p)
    breaks[p] = a + (b - a) * static_cast<double>(p) / static_cast<double>(panels);
  return piecewise_gauss_legendre(breaks, points);
}

Rule midpoint_rule(double a, double b, std::size_t n) {
  Rule out;
  out.nodes.resize(n);
  out.weights.assign(n, (b - a) / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    out.nodes[i] = a + (b - a) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  return out;
}

}  // namespace transpec
