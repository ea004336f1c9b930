#include "transpec/npt_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "transpec/errors.hpp"
#include "transpec/quadrature.hpp"

namespace transpec {

// ---------------------------------------------------------------- rescaling

EmpiricalRescale::EmpiricalRescale(std::vector<double> y, double a, double b)
    : sorted_(std::move(y)), a_(a), b_(b) {
  std::sort(sorted_.begin(), sorted_.end());
  if (!(a < b)) fail(ErrorKind::InvalidConfig, "anchors must satisfy a < b");
  f_a_ = cdf(a);
  f_b_ = cdf(b);
  if (f_b_ == f_a_)
    fail(ErrorKind::DegenerateAnchors, "empirical CDF is flat between the anchors");
}

double EmpiricalRescale::cdf(double y) const noexcept {
  if (sorted_.empty()) return 0.0;
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), y);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

EmpiricalRescale empirical_rescale(const Dataset& data, double a, double b) {
  return EmpiricalRescale(data.ys(), a, b);
}

// ---------------------------------------------------------------- v weight

namespace {

constexpr double kTriweightNorm = 35.0 / 32.0;

double bump(double x, const Interval& s, VWeightKind kind) noexcept {
  if (x < s.lo || x > s.hi) return 0.0;
  const double hw = 0.5 * s.length();
  if (kind == VWeightKind::Uniform) return 1.0 / s.length();
  const double t = (x - 0.5 * (s.lo + s.hi)) / hw;
  const double q = 1.0 - t * t;
  return kTriweightNorm / hw * q * q * q;
}

double bump_d(double x, const Interval& s, VWeightKind kind) noexcept {
  if (kind == VWeightKind::Uniform || x <= s.lo || x >= s.hi) return 0.0;
  const double hw = 0.5 * s.length();
  const double t = (x - 0.5 * (s.lo + s.hi)) / hw;
  const double q = 1.0 - t * t;
  return kTriweightNorm / (hw * hw) * (-6.0 * t * q * q);
}

}  // namespace

double VWeight::density(std::span<const double> x) const noexcept {
  double v = 1.0;
  for (std::size_t k = 0; k < support.size(); ++k) v *= bump(x[k], support[k], kind);
  return v;
}

double VWeight::density_d1(std::span<const double> x) const noexcept {
  if (support.empty()) return 0.0;
  double v = bump_d(x[0], support[0], kind);
  for (std::size_t k = 1; k < support.size(); ++k) v *= bump(x[k], support[k], kind);
  return v;
}

// ---------------------------------------------------------------- config

void NptConfig::validate() const {
  if (n_x < 10) fail(ErrorKind::InvalidConfig, "npt.n_x must be at least 10");
  if (n_u < 20) fail(ErrorKind::GridTooCoarse, "npt.n_u must be at least 20");
  if (!(anchor_a < anchor_b)) fail(ErrorKind::InvalidConfig, "anchors must satisfy a < b");
  if (quad_points < 1 || quad_points > 20)
    fail(ErrorKind::InvalidConfig, "npt.quad_points must be in [1, 20]");
  if (!(v_trim >= 0.0 && v_trim < 0.5)) fail(ErrorKind::InvalidConfig, "npt.v_trim must be in [0, 0.5)");
  if (bandwidth.h_u && !(*bandwidth.h_u > 0.0))
    fail(ErrorKind::InvalidConfig, "bandwidth.h_u must be positive");
  for (double h : bandwidth.h_x)
    if (!(h > 0.0)) fail(ErrorKind::InvalidConfig, "bandwidth.h_x must be positive");
  if (bandwidth.b && !(*bandwidth.b > 0.0))
    fail(ErrorKind::InvalidConfig, "bandwidth.b must be positive");
  for (const auto& s : v_support)
    if (!(s.length() > 0.0)) fail(ErrorKind::InvalidConfig, "npt.v_support must have positive length");
}

// ---------------------------------------------------------------- conditional CDF

ConditionalCdf::ConditionalCdf(const Dataset& data, std::vector<double> u_hat, double h_u,
                               std::vector<double> h_x, Kernel kernel)
    : data_(&data), u_hat_(std::move(u_hat)), h_u_(h_u), h_x_(std::move(h_x)), kernel_(kernel) {
  if (u_hat_.size() != data.n()) fail(ErrorKind::Internal, "ConditionalCdf: size mismatch");
  if (h_x_.size() == 1 && data.dx() > 1) h_x_.assign(data.dx(), h_x_[0]);
  if (h_x_.size() != data.dx()) fail(ErrorKind::InvalidConfig, "h_x dimension mismatch");
}

ConditionalCdf::Value ConditionalCdf::evaluate(double u, std::span<const double> x) const {
  const std::size_t n = data_->n();
  const std::size_t d = data_->dx();
  double A = 0.0, A1 = 0.0, N = 0.0, N1 = 0.0, P = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t0 = (data_->x(i, 0) - x[0]) / h_x_[0];
    double a = kernel_.eval(t0) / h_x_[0];
    double a1 = -kernel_.deriv(t0) / (h_x_[0] * h_x_[0]);
    for (std::size_t c = 1; c < d; ++c) {
      const double kc = kernel_.eval((data_->x(i, c) - x[c]) / h_x_[c]) / h_x_[c];
      a *= kc;
      a1 *= kc;
    }
    if (a == 0.0 && a1 == 0.0) continue;
    const double tu = (u - u_hat_[i]) / h_u_;
    const double cu = kernel_.integral(tu);
    A += a;
    A1 += a1;
    N += a * cu;
    N1 += a1 * cu;
    P += a * kernel_.eval(tu) / h_u_;
  }
  if (!(A > 0.0)) fail(ErrorKind::EmptyNeighborhood, "no observation within the covariate kernel window");
  return {N / A, P / A, (N1 * A - N * A1) / (A * A)};
}

double ConditionalCdf::s1(double u, std::span<const double> x, double floor) const {
  if (u == 0.0) return 0.0;
  int sign = 0;
  auto integrand = [&](double r) {
    const Value v = evaluate(r, x);
    if (!(std::abs(v.d_x1) >= floor))
      fail(ErrorKind::VanishingDenominator, "dF/dx1 below floor along the s1 path");
    const int s = v.d_x1 > 0.0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign) fail(ErrorKind::VanishingDenominator, "dF/dx1 changes sign along the s1 path");
    return v.d_u / v.d_x1;
  };
  if (u > 0.0) return integrate_adaptive(integrand, 0.0, u, 1e-10, 1e-8, "s1");
  return -integrate_adaptive(integrand, u, 0.0, 1e-10, 1e-8, "s1");
}

// ---------------------------------------------------------------- smoothed median

namespace {

double weighted_median(std::span<const double> rho, std::span<const double> w) {
  std::vector<std::size_t> idx(rho.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return rho[a] < rho[b]; });
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  double acc = 0.0;
  for (std::size_t i : idx) {
    acc += w[i];
    if (acc >= 0.5 * total) return rho[i];
  }
  return rho[idx.back()];
}

double objective(std::span<const double> rho, std::span<const double> w,
                 const SmoothedSign& sign, double q) {
  double f = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k) f += w[k] * sign.abs(rho[k] - q);
  return f;
}

double objective_d1(std::span<const double> rho, std::span<const double> w,
                    const SmoothedSign& sign, double q) {
  double g = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k) g -= w[k] * sign.abs_d1(rho[k] - q);
  return g;
}

// Cauchy smoothing: d/dz [z·(2/π)atan(z/b)] and its derivative, inlined.
void cauchy_d1_d2(std::span<const double> rho, std::span<const double> w, double b, double q,
                  double& g, double& h) {
  constexpr double two_over_pi = 0.63661977236758134308;
  g = 0.0;
  h = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    const double t = (rho[k] - q) / b;
    const double d = 1.0 / (1.0 + t * t);
    g -= w[k] * (std::atan(t) + t * d);
    h += w[k] * d * d;
  }
  g *= two_over_pi;
  h *= 2.0 * two_over_pi / b;
}

}  // namespace

double smoothed_median(std::span<const double> rho, std::span<const double> weights,
                       const SmoothedSign& sign, std::optional<double> start) {
  if (rho.empty()) fail(ErrorKind::Internal, "smoothed_median: no values");
  const auto [mn, mx] = std::minmax_element(rho.begin(), rho.end());
  if (*mn == *mx) return *mn;
  double lo = *mn - 3.0 * sign.b;
  double hi = *mx + 3.0 * sign.b;
  constexpr double tol = 1e-9;

  if (sign.kernel.kind() == KernelKind::Cauchy) {
    // Convex objective: safeguarded Newton on the derivative.
    double q = start && *start > lo && *start < hi ? *start : weighted_median(rho, weights);
    for (int it = 0; it < 200; ++it) {
      double g, h;
      cauchy_d1_d2(rho, weights, sign.b, q, g, h);
      if (g == 0.0) return q;
      if (g < 0.0) lo = q; else hi = q;
      double next = h > 0.0 ? q - g / h : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - q) < tol) return next;
      q = next;
      if (hi - lo < tol) return 0.5 * (lo + hi);
    }
    return q;
  }

  // General smoothing kernel: golden-section on the objective, then
  // bisection on the derivative inside the final bracket.
  constexpr double invphi = 0.61803398874989484820;
  double a = lo, c = hi;
  double x1 = c - invphi * (c - a), x2 = a + invphi * (c - a);
  double f1 = objective(rho, weights, sign, x1), f2 = objective(rho, weights, sign, x2);
  while (c - a > 1e-4 * (hi - lo)) {
    if (f1 <= f2) {
      c = x2; x2 = x1; f2 = f1;
      x1 = c - invphi * (c - a);
      f1 = objective(rho, weights, sign, x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + invphi * (c - a);
      f2 = objective(rho, weights, sign, x2);
    }
  }
  double ga = objective_d1(rho, weights, sign, a);
  const double gc = objective_d1(rho, weights, sign, c);
  if (!(ga <= 0.0 && gc >= 0.0)) return f1 <= f2 ? x1 : x2;
  while (c - a > tol) {
    const double m = 0.5 * (a + c);
    const double gm = objective_d1(rho, weights, sign, m);
    if (gm <= 0.0) { a = m; ga = gm; } else { c = m; }
  }
  return 0.5 * (a + c);
}

// ---------------------------------------------------------------- context

namespace {

double quantile_sorted(const std::vector<double>& s, double p) {
  const double pos = p * static_cast<double>(s.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= s.size()) return s.back();
  return s[i] + frac * (s[i + 1] - s[i]);
}

}  // namespace

NptContext make_context(const Dataset& data, const NptConfig& config) {
  config.validate();
  if (data.n() < 20) fail(ErrorKind::InvalidConfig, "estimation needs at least 20 observations");
  NptContext ctx;
  ctx.dx = data.dx();
  ctx.t_hat = empirical_rescale(data, config.anchor_a, config.anchor_b);
  ctx.u_hat.resize(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) ctx.u_hat[i] = ctx.t_hat(data.y(i));
  ctx.kernel = biweight_kernel(config.paper_exact_kernel);

  const auto n = static_cast<double>(data.n());
  ctx.bandwidths.h_u = config.bandwidth.h_u ? *config.bandwidth.h_u
                                            : normal_reference_bandwidth(ctx.u_hat);
  if (!config.bandwidth.h_x.empty()) {
    ctx.bandwidths.h_x = config.bandwidth.h_x;
    if (ctx.bandwidths.h_x.size() == 1) ctx.bandwidths.h_x.assign(ctx.dx, ctx.bandwidths.h_x[0]);
    if (ctx.bandwidths.h_x.size() != ctx.dx)
      fail(ErrorKind::InvalidConfig, "bandwidth.h_x dimension mismatch");
  } else {
    for (std::size_t k = 0; k < ctx.dx; ++k)
      ctx.bandwidths.h_x.push_back(normal_reference_bandwidth(data.x_column(k)));
  }
  ctx.bandwidths.b = config.bandwidth.b ? *config.bandwidth.b
                                        : config.bandwidth.b_scale * std::pow(n, config.bandwidth.b_exponent);
  ctx.sign = SmoothedSign{Kernel(config.median_kernel), ctx.bandwidths.b};

  ctx.v.kind = config.v_kind;
  if (!config.v_support.empty()) {
    if (config.v_support.size() != ctx.dx)
      fail(ErrorKind::InvalidConfig, "npt.v_support dimension mismatch");
    ctx.v.support = config.v_support;
  } else {
    for (std::size_t k = 0; k < ctx.dx; ++k) {
      auto col = data.x_column(k);
      std::sort(col.begin(), col.end());
      ctx.v.support.push_back({quantile_sorted(col, config.v_trim),
                               quantile_sorted(col, 1.0 - config.v_trim)});
    }
  }
  for (std::size_t k = 0; k < ctx.dx; ++k) {
    const Interval r = data.x_range(k);
    const Interval& s = ctx.v.support[k];
    if (!(s.length() > 0.0))
      fail(ErrorKind::InvalidConfig, "v support has zero length");
    if (s.lo < r.lo - 1e-12 * (1 + std::abs(r.lo)) || s.hi > r.hi + 1e-12 * (1 + std::abs(r.hi)))
      fail(ErrorKind::InvalidConfig, "v support leaves the observed covariate range");
  }

  // Tensor midpoint rule with ~n_x nodes in total.
  const auto per_dim = static_cast<std::size_t>(std::ceil(
      std::pow(static_cast<double>(config.n_x), 1.0 / static_cast<double>(ctx.dx)) - 1e-9));
  std::vector<Rule> rules;
  for (std::size_t k = 0; k < ctx.dx; ++k)
    rules.push_back(midpoint_rule(ctx.v.support[k].lo, ctx.v.support[k].hi,
                                  ctx.dx == 1 ? config.n_x : per_dim));
  std::size_t total = 1;
  for (const auto& r : rules) total *= r.size();
  std::vector<double> node(ctx.dx);
  double wsum = 0.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double cell = 1.0;
    for (std::size_t k = ctx.dx; k-- > 0;) {
      const std::size_t j = rem % rules[k].size();
      rem /= rules[k].size();
      node[k] = rules[k].nodes[j];
      cell *= rules[k].weights[j];
    }
    const double w = ctx.v.density(node) * cell;
    if (w <= 0.0) continue;
    ctx.x_nodes.insert(ctx.x_nodes.end(), node.begin(), node.end());
    ctx.x_weights.push_back(w);
    wsum += w;
  }
  for (double& w : ctx.x_weights) w /= wsum;
  ctx.y_window = config.y_window ? *config.y_window : data.y_range();
  return ctx;
}

double q_hat(double u, const Dataset& data, const NptContext& ctx, const NptConfig& config) {
  const ConditionalCdf cc(data, ctx.u_hat, ctx.bandwidths.h_u, ctx.bandwidths.h_x, ctx.kernel);
  std::vector<double> rho, weights;
  for (std::size_t k = 0; k < ctx.n_nodes(); ++k) {
    try {
      const double s1_one = cc.s1(1.0, ctx.node(k), config.denominator_floor);
      if (!(std::abs(s1_one) >= config.s1_floor))
        fail(ErrorKind::VanishingDenominator, "s1(1, x) below floor");
      rho.push_back(cc.s1(u, ctx.node(k), config.denominator_floor) / s1_one);
      weights.push_back(ctx.x_weights[k]);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::VanishingDenominator ||
          config.denominator_policy == DenominatorPolicy::Error)
        throw;
    }
  }
  if (rho.empty())
    fail(ErrorKind::VanishingDenominator, "no covariate node has a valid s1 path");
  return smoothed_median(rho, weights, ctx.sign);
}

double q_hat(double u, const Dataset& data, const NptConfig& config) {
  return q_hat(u, data, make_context(data, config), config);
}

// ---------------------------------------------------------------- monotone fit

std::vector<double> isotonic_projection(std::span<const double> values) {
  struct Block {
    double sum;
    std::size_t count;
  };
  std::vector<Block> blocks;
  blocks.reserve(values.size());
  for (double v : values) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1) {
      const Block& last = blocks.back();
      const Block& prev = blocks[blocks.size() - 2];
      if (prev.sum / static_cast<double>(prev.count) <= last.sum / static_cast<double>(last.count))
        break;
      const Block merged{prev.sum + last.sum, prev.count + last.count};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  std::size_t pos = 0;
  for (const Block& b : blocks) {
    if (b.count == 1) {
      out.push_back(values[pos]);
    } else {
      out.insert(out.end(), b.count, b.sum / static_cast<double>(b.count));
    }
    pos += b.count;
  }
  return out;
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) fail(ErrorKind::Internal, "MonotoneCubic needs two or more knots");
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x_[k + 1] - x_[k];
    if (!(h[k] > 0.0)) fail(ErrorKind::Internal, "MonotoneCubic knots must increase");
    delta[k] = (y_[k + 1] - y_[k]) / h[k];
  }
  d_.assign(n, 0.0);
  if (n == 2) {
    d_[0] = d_[1] = delta[0];
    return;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) continue;
    const double w1 = 2.0 * h[k] + h[k - 1];
    const double w2 = h[k] + 2.0 * h[k - 1];
    d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(d) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return d;
  };
  d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

double MonotoneCubic::operator()(double t) const noexcept {
  const std::size_t n = x_.size();
  if (t <= x_[0]) return y_[0] + d_[0] * (t - x_[0]);
  if (t >= x_[n - 1]) return y_[n - 1] + d_[n - 1] * (t - x_[n - 1]);
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const auto k = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double h = x_[k + 1] - x_[k];
  const double s = (t - x_[k]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y_[k] + (s3 - 2 * s2 + s) * h * d_[k] +
         (-2 * s3 + 3 * s2) * y_[k + 1] + (s3 - s2) * h * d_[k + 1];
}

// ---------------------------------------------------------------- estimate

NptEstimate::NptEstimate(EmpiricalRescale t_hat, std::vector<double> u_grid,
                         std::vector<double> q_raw, BandwidthSet bandwidths, Interval y_window)
    : t_hat_(std::move(t_hat)),
      u_grid_(std::move(u_grid)),
      q_raw_(std::move(q_raw)),
      bandwidths_(std::move(bandwidths)),
      y_window_(y_window) {
  q_values_ = isotonic_projection(q_raw_);
  for (std::size_t k = 0; k < q_raw_.size(); ++k)
    if (q_values_[k] != q_raw_[k]) ++adjusted_;
  q_interp_ = MonotoneCubic(u_grid_, q_values_);
}

std::vector<double> NptEstimate::eval(std::span<const double> ys) const {
  std::vector<double> out(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) out[i] = eval(ys[i]);
  return out;
}

NptEstimate estimate_h(const Dataset& data, const NptConfig& config) {
  const NptContext ctx = make_context(data, config);
  const std::size_t n = data.n();
  const std::size_t d = ctx.dx;
  const std::size_t nx = ctx.n_nodes();
  const double h_u = ctx.bandwidths.h_u;
  const auto& h_x = ctx.bandwidths.h_x;
  const Kernel& K = ctx.kernel;

  // u-grid over T̂(𝒴_w), with the anchors 0 and 1 as extra nodes.
  const double u_lo = ctx.t_hat(ctx.y_window.lo);
  const double u_hi = ctx.t_hat(ctx.y_window.hi);
  if (!(u_hi > u_lo)) fail(ErrorKind::DegenerateAnchors, "weight support maps to a single u value");
  std::vector<double> grid(config.n_u);
  for (std::size_t j = 0; j < config.n_u; ++j)
    grid[j] = u_lo + (u_hi - u_lo) * static_cast<double>(j) / static_cast<double>(config.n_u - 1);
  grid.back() = u_hi;
  for (double anchor : {0.0, 1.0}) {
    if (anchor <= u_lo || anchor >= u_hi) continue;
    auto it = std::lower_bound(grid.begin(), grid.end(), anchor);
    const double gap = 1e-9 * (u_hi - u_lo);
    if (it != grid.end() && std::abs(*it - anchor) < gap) *it = anchor;
    else if (it != grid.begin() && std::abs(*(it - 1) - anchor) < gap) *(it - 1) = anchor;
    else grid.insert(it, anchor);
  }
  std::vector<double> merged = grid;
  merged.push_back(0.0);
  merged.push_back(1.0);
  std::sort(merged.begin(), merged.end());
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  const auto zero_pos = static_cast<std::size_t>(
      std::lower_bound(merged.begin(), merged.end(), 0.0) - merged.begin());
  const auto one_pos = static_cast<std::size_t>(
      std::lower_bound(merged.begin(), merged.end(), 1.0) - merged.begin());

  const Rule r_rule = piecewise_gauss_legendre(merged, config.quad_points);
  const std::size_t nr = r_rule.size();
  const std::size_t qp = config.quad_points;

  // Covariate kernel weights a_i(x_k) and their x₁-derivatives.
  Eigen::MatrixXd W(n, 2 * nx);
  for (std::size_t k = 0; k < nx; ++k) {
    const auto xk = ctx.node(k);
    for (std::size_t i = 0; i < n; ++i) {
      const double t0 = (data.x(i, 0) - xk[0]) / h_x[0];
      double a = K.eval(t0) / h_x[0];
      double a1 = -K.deriv(t0) / (h_x[0] * h_x[0]);
      for (std::size_t c = 1; c < d; ++c) {
        const double kc = K.eval((data.x(i, c) - xk[c]) / h_x[c]) / h_x[c];
        a *= kc;
        a1 *= kc;
      }
      W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = a;
      W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(nx + k)) = a1;
    }
  }
  const Eigen::RowVectorXd colsum = W.colwise().sum();
  for (std::size_t k = 0; k < nx; ++k)
    if (!(colsum(static_cast<Eigen::Index>(k)) > 0.0))
      fail(ErrorKind::EmptyNeighborhood, "no observation within the covariate kernel window");

  Eigen::MatrixXd Kr(nr, n), Cr(nr, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ui = ctx.u_hat[i];
    for (std::size_t r = 0; r < nr; ++r) {
      const double t = (r_rule.nodes[r] - ui) / h_u;
      Kr(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = K.eval(t) / h_u;
      Cr(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = K.integral(t);
    }
  }
  const auto nxi = static_cast<Eigen::Index>(nx);
  const Eigen::MatrixXd P = Kr * W.leftCols(nxi);
  const Eigen::MatrixXd NN = Cr * W;

  // ŝ₁ at every merged node, by cumulative panel sums from u = 0. A node's
  // valid range is the run of panels around [0, 1] on which |∂F̂/∂x₁| stays
  // above the floor with a constant sign.
  const std::size_t nm = merged.size();
  Eigen::MatrixXd s1(nm, nx);
  std::vector<double> panel(nm - 1);
  std::vector<char> panel_ok(nm - 1);
  std::vector<std::size_t> valid_lo(nx), valid_hi(nx);
  std::vector<char> node_ok(nx, 0);
  // Reference sign: the denominator at the Gauss node closest to u = 1/2.
  std::size_t ref = 0;
  for (std::size_t r = 1; r < nr; ++r)
    if (std::abs(r_rule.nodes[r] - 0.5) < std::abs(r_rule.nodes[ref] - 0.5)) ref = r;
  const auto refi = static_cast<Eigen::Index>(ref);
  for (std::size_t k = 0; k < nx; ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    const double A = colsum(ki);
    const double A1 = colsum(nxi + ki);
    const double floor = config.denominator_floor * A * A;
    const double ref_den = NN(refi, nxi + ki) * A - NN(refi, ki) * A1;
    const int sign = ref_den > 0.0 ? 1 : -1;
    for (std::size_t p = 0; p + 1 < nm; ++p) {
      double acc = 0.0;
      bool ok = true;
      for (std::size_t g = 0; g < qp; ++g) {
        const auto r = static_cast<Eigen::Index>(p * qp + g);
        const double den = NN(r, nxi + ki) * A - NN(r, ki) * A1;
        if (!(std::abs(den) >= floor) || (den > 0.0 ? 1 : -1) != sign) {
          ok = false;
          break;
        }
        acc += r_rule.weights[static_cast<std::size_t>(r)] * P(r, ki) * A / den;
      }
      panel[p] = acc;
      panel_ok[p] = ok;
    }
    bool core = true;
    for (std::size_t p = zero_pos; p < one_pos; ++p) core = core && panel_ok[p];
    if (!core) continue;
    std::size_t hi = one_pos;
    while (hi + 1 < nm && panel_ok[hi]) ++hi;
    std::size_t lo = zero_pos;
    while (lo > 0 && panel_ok[lo - 1]) --lo;
    valid_lo[k] = lo;
    valid_hi[k] = hi;
    s1(static_cast<Eigen::Index>(zero_pos), ki) = 0.0;
    double cum = 0.0;
    for (std::size_t m = zero_pos + 1; m <= hi; ++m) {
      cum += panel[m - 1];
      s1(static_cast<Eigen::Index>(m), ki) = cum;
    }
    cum = 0.0;
    for (std::size_t m = zero_pos; m-- > lo;) {
      cum -= panel[m];
      s1(static_cast<Eigen::Index>(m), ki) = cum;
    }
    if (!(std::abs(s1(static_cast<Eigen::Index>(one_pos), ki)) >= config.s1_floor)) continue;
    node_ok[k] = 1;
  }

  if (config.denominator_policy == DenominatorPolicy::Error) {
    for (std::size_t k = 0; k < nx; ++k)
      if (!node_ok[k] || valid_lo[k] > 0 || valid_hi[k] + 1 < nm)
        fail(ErrorKind::VanishingDenominator, "dF/dx1 below floor or sign change on the u-grid");
  }

  std::vector<double> q_raw(grid.size());
  std::vector<double> rho, weights;
  rho.reserve(nx);
  weights.reserve(nx);
  std::optional<double> warm;
  std::size_t excluded = 0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto m = static_cast<std::size_t>(
        std::lower_bound(merged.begin(), merged.end(), grid[j]) - merged.begin());
    rho.clear();
    weights.clear();
    for (std::size_t k = 0; k < nx; ++k) {
      if (!node_ok[k] || m < valid_lo[k] || m > valid_hi[k]) {
        ++excluded;
        continue;
      }
      const auto ki = static_cast<Eigen::Index>(k);
      rho.push_back(s1(static_cast<Eigen::Index>(m), ki) /
                    s1(static_cast<Eigen::Index>(one_pos), ki));
      weights.push_back(ctx.x_weights[k]);
    }
    if (rho.empty())
      fail(ErrorKind::VanishingDenominator,
           "no covariate node has a valid s1 path to u = " + std::to_string(grid[j]));
    q_raw[j] = smoothed_median(rho, weights, ctx.sign, warm);
    warm = q_raw[j];
  }
  NptEstimate est(ctx.t_hat, std::move(grid), std::move(q_raw), ctx.bandwidths, ctx.y_window);
  est.set_excluded_pairs(excluded);
  return est;
}

}  // namespace transpec
