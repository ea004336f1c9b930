#include "transpec/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "transpec/errors.hpp"
#include "transpec/parallel.hpp"
#include "transpec/rng.hpp"

namespace transpec {

void BootstrapConfig::validate() const {
  if (m < 20) fail(ErrorKind::InvalidConfig, "bootstrap.m must be at least 20");
  if (B < 50) fail(ErrorKind::InvalidConfig, "bootstrap.B must be at least 50");
  if (!(a_n > 0.0) || !(b_n > 0.0)) fail(ErrorKind::InvalidConfig, "bootstrap.a_n and b_n must be positive");
  if (g_bandwidth && !(*g_bandwidth > 0.0))
    fail(ErrorKind::InvalidConfig, "bootstrap.g_bandwidth must be positive");
  if (!(extension > 0.0)) fail(ErrorKind::InvalidConfig, "bootstrap.extension must be positive");
  if (!(max_failure_fraction >= 0.0 && max_failure_fraction < 1.0))
    fail(ErrorKind::InvalidConfig, "bootstrap.max_failure_fraction must be in [0, 1)");
}

// ---------------------------------------------------------------- regression

RegressionFn::RegressionFn(const Dataset& data, std::vector<double> responses,
                           std::vector<double> bandwidths, Kernel kernel, RegressionMethod method)
    : x_(data.xs()),
      r_(std::move(responses)),
      h_(std::move(bandwidths)),
      dx_(data.dx()),
      kernel_(kernel),
      method_(method) {
  if (r_.size() != data.n()) fail(ErrorKind::Internal, "RegressionFn: size mismatch");
  if (h_.size() == 1 && dx_ > 1) h_.assign(dx_, h_[0]);
  if (h_.size() != dx_) fail(ErrorKind::InvalidConfig, "regression bandwidth dimension mismatch");
  for (std::size_t k = 0; k < dx_; ++k) hull_.push_back(data.x_range(k));
}

double RegressionFn::operator()(std::span<const double> x) const {
  if (method_ == RegressionMethod::NadarayaWatson) return nadaraya_watson(x);
  const std::size_t n = r_.size();
  const auto p = static_cast<Eigen::Index>(dx_ + 1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd z(p);
  std::size_t support = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = 1.0;
    for (std::size_t k = 0; k < dx_ && a != 0.0; ++k) a *= kernel_.eval((x_[i * dx_ + k] - x[k]) / h_[k]);
    if (a == 0.0) continue;
    ++support;
    z(0) = 1.0;
    for (std::size_t k = 0; k < dx_; ++k) z(static_cast<Eigen::Index>(k + 1)) = (x_[i * dx_ + k] - x[k]) / h_[k];
    A.noalias() += a * z * z.transpose();
    rhs.noalias() += a * r_[i] * z;
  }
  if (support > dx_ + 1) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    const double scale = A.diagonal().maxCoeff();
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        ldlt.vectorD().minCoeff() > 1e-8 * scale) {
      const double value = ldlt.solve(rhs)(0);
      if (std::isfinite(value)) return value;
    }
  }
  return nadaraya_watson(x);
}

double RegressionFn::nadaraya_watson(std::span<const double> x) const {
  const std::size_t n = r_.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = 1.0;
    for (std::size_t k = 0; k < dx_ && a != 0.0; ++k)
      a *= kernel_.eval((x_[i * dx_ + k] - hull_[k].clamp(x[k])) / h_[k]);
    num += a * r_[i];
    den += a;
  }
  if (!(den > 0.0)) fail(ErrorKind::EmptyNeighborhood, "regression: no observation near x");
  return num / den;
}

RegressionFn estimate_g(const Dataset& data, const NormalizedTransform& h_theta,
                        std::optional<double> bandwidth, bool paper_exact_kernel,
                        RegressionMethod method) {
  std::vector<double> resp(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) resp[i] = h_theta(data.y(i));
  std::vector<double> h;
  if (bandwidth) {
    h.assign(data.dx(), *bandwidth);
  } else {
    for (std::size_t k = 0; k < data.dx(); ++k) h.push_back(normal_reference_bandwidth(data.x_column(k)));
  }
  return RegressionFn(data, std::move(resp), std::move(h), biweight_kernel(paper_exact_kernel), method);
}

std::vector<double> residuals(const Dataset& data, const NormalizedTransform& h_theta,
                              const RegressionFn& g_hat) {
  std::vector<double> eps(data.n());
  double mean = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    eps[i] = h_theta(data.y(i)) - g_hat(data.x_row(i));
    mean += eps[i];
  }
  mean /= static_cast<double>(data.n());
  for (double& e : eps) e -= mean;
  return eps;
}

// ---------------------------------------------------------------- h*

ExtendedTransform::ExtendedTransform(NormalizedTransform h, Interval window)
    : h_(std::move(h)), window_(window) {
  if (!(window_.length() > 0.0)) fail(ErrorKind::Internal, "ExtendedTransform: empty window");
  v_lo_ = h_.eval(window_.lo);
  v_hi_ = h_.eval(window_.hi);
  d_lo_ = h_.deriv(window_.lo);
  d_hi_ = h_.deriv(window_.hi);
  if (!(d_lo_ > 0.0) || !(d_hi_ > 0.0) || !std::isfinite(d_lo_) || !std::isfinite(d_hi_))
    fail(ErrorKind::DegenerateScale, "h* has a non-positive slope at the extension boundary");
}

double ExtendedTransform::eval(double y) const {
  if (y < window_.lo) return v_lo_ + d_lo_ * (y - window_.lo);
  if (y > window_.hi) return v_hi_ + d_hi_ * (y - window_.hi);
  return h_.eval(y);
}

double ExtendedTransform::inverse(double s, bool* extended) const {
  if (extended) *extended = false;
  if (s < v_lo_) {
    if (extended) *extended = true;
    return window_.lo + (s - v_lo_) / d_lo_;
  }
  if (s > v_hi_) {
    if (extended) *extended = true;
    return window_.hi + (s - v_hi_) / d_hi_;
  }
  return window_.clamp(h_.inverse(s));
}

// ---------------------------------------------------------------- resampling

namespace {

double smoothing_draw(SmoothingKind kind, Rng& rng) {
  return kind == SmoothingKind::Uniform ? rng.uniform(-1.0, 1.0) : rng.normal();
}

constexpr std::uint64_t kBootstrapStream = 0xB0075788ULL;

}  // namespace

BootstrapDraw draw_bootstrap_sample(const Dataset& data, const ExtendedTransform& h_star,
                                    const RegressionFn& g_hat, std::span<const double> eps_tilde,
                                    const BootstrapConfig& config, std::uint64_t replicate) {
  if (eps_tilde.size() != data.n()) fail(ErrorKind::Internal, "draw_bootstrap_sample: residual size");
  Rng rng(config.seed, {kBootstrapStream, replicate});
  const std::size_t d = data.dx();
  std::vector<double> xs(config.m * d), ys(config.m);
  BootstrapDraw out;
  for (std::size_t j = 0; j < config.m; ++j) {
    const auto i = rng.index(data.n());
    for (std::size_t k = 0; k < d; ++k)
      xs[j * d + k] = data.x(i, k) + config.b_n * smoothing_draw(config.kappa, rng);
    const auto e = rng.index(data.n());
    const double eps = eps_tilde[e] + config.a_n * smoothing_draw(config.ell, rng);
    const double s = g_hat(std::span<const double>(xs.data() + j * d, d)) + eps;
    bool ext = false;
    ys[j] = h_star.inverse(s, &ext);
    if (ext) ++out.extended;
  }
  out.data = Dataset(std::move(ys), std::move(xs), d);
  return out;
}

TnResult bootstrap_statistic(const Dataset& star, const ParametricFamily& family,
                             const NptConfig& npt, const TestConfig& test) {
  const NptEstimate est = estimate_h(star, npt);
  const WeightFn w = WeightFn::from_sample(test.weight, star.ys());
  return compute_Tn(star, est, family, w, test);
}

double bootstrap_quantile(std::span<const double> stats, double alpha) {
  if (stats.empty()) fail(ErrorKind::InsufficientReplications, "bootstrap_quantile: no statistics");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::InvalidConfig, "alpha must be in (0, 1)");
  std::vector<double> s(stats.begin(), stats.end());
  std::sort(s.begin(), s.end());
  const auto B = static_cast<double>(s.size());
  // The k-th order statistic (1-based, counting ties) has ECDF ≥ k/B.
  for (std::size_t k = 0; k < s.size(); ++k) {
    std::size_t last = k;
    while (last + 1 < s.size() && s[last + 1] == s[k]) ++last;
    if (static_cast<double>(last + 1) / B >= alpha) return s[k];
    k = last;
  }
  return s.back();
}

// ---------------------------------------------------------------- test

GofReport gof_test(const Dataset& data, const FamilyPtr& family, const GofConfig& config) {
  if (!family) fail(ErrorKind::Internal, "gof_test: null family");
  config.bootstrap.validate();
  if (config.alphas.empty()) fail(ErrorKind::InvalidConfig, "at least one level alpha is required");
  for (double a : config.alphas)
    if (!(a > 0.0 && a < 1.0)) fail(ErrorKind::InvalidConfig, "alpha must be in (0, 1)");

  GofReport rep;
  const NptEstimate est = estimate_h(data, config.npt);
  const WeightFn weight = WeightFn::from_sample(config.test.weight, data.ys());
  const TnResult tn = compute_Tn(data, est, *family, weight, config.test);
  rep.t_n = tn.t_n;
  rep.gamma_hat = tn.gamma;
  rep.bandwidths = est.bandwidths();
  rep.diagnostics.stalled = tn.stalled;
  rep.diagnostics.isotonic_adjustments = est.isotonic_adjustments();
  rep.diagnostics.excluded_pairs = est.excluded_pairs();

  const NormalizedTransform h_theta = normalize(family, tn.gamma.theta);
  const RegressionFn g_hat =
      estimate_g(data, h_theta, config.bootstrap.g_bandwidth, config.npt.paper_exact_kernel,
                 config.bootstrap.g_method);
  rep.diagnostics.g_bandwidth = g_hat.bandwidths().front();
  const auto eps = residuals(data, h_theta, g_hat);
  const Interval yr = data.y_range();
  const double pad = config.bootstrap.extension * yr.length();
  const ExtendedTransform h_star(h_theta, {yr.lo - pad, yr.hi + pad});

  // The v support stays the one chosen on the original data.
  NptConfig npt_star = config.npt;
  if (npt_star.v_support.empty()) npt_star.v_support = make_context(data, config.npt).v.support;
  npt_star.y_window.reset();

  const std::size_t B = config.bootstrap.B;
  enum class Outcome : unsigned char { Ok, Failed, Anchor };
  std::vector<double> stats(B, 0.0);
  std::vector<Outcome> outcome(B, Outcome::Ok);
  std::vector<std::size_t> extended(B, 0), stalls(B, 0);
  parallel_for(B, config.workers, [&](std::size_t b) {
    const BootstrapDraw draw = draw_bootstrap_sample(data, h_star, g_hat, eps, config.bootstrap, b);
    extended[b] = draw.extended;
    const Interval r = draw.data.y_range();
    if (!(r.lo <= npt_star.anchor_a && r.hi >= npt_star.anchor_b)) {
      outcome[b] = Outcome::Anchor;
      return;
    }
    try {
      const TnResult t = bootstrap_statistic(draw.data, *family, npt_star, config.test);
      stats[b] = t.t_n;
      stalls[b] = t.stalled ? 1 : 0;
    } catch (const Error& e) {
      if (!e.is_input_error()) throw;
      outcome[b] = Outcome::Failed;
    }
  });

  for (std::size_t b = 0; b < B; ++b) {
    rep.diagnostics.extended += extended[b];
    rep.diagnostics.stalls += stalls[b];
    if (outcome[b] == Outcome::Ok) {
      rep.statistics.push_back(stats[b]);
    } else if (outcome[b] == Outcome::Anchor) {
      ++rep.diagnostics.anchor_drops;
    } else {
      ++rep.diagnostics.failed;
    }
  }
  const std::size_t dropped = rep.diagnostics.failed + rep.diagnostics.anchor_drops;
  if (static_cast<double>(dropped) > config.bootstrap.max_failure_fraction * static_cast<double>(B))
    fail(ErrorKind::InsufficientReplications,
         std::to_string(dropped) + " of " + std::to_string(B) + " bootstrap replications failed");

  rep.b_used = rep.statistics.size();
  rep.m_used = config.bootstrap.m;
  std::size_t above = 0;
  for (double s : rep.statistics) above += s >= rep.t_n ? 1 : 0;
  rep.p_star = static_cast<double>(above) / static_cast<double>(rep.b_used);
  rep.alphas = config.alphas;
  for (double a : config.alphas) {
    const double q = bootstrap_quantile(rep.statistics, 1.0 - a);
    rep.quantiles.push_back(q);
    rep.reject.push_back(rep.t_n > q);
  }
  return rep;
}

}  // namespace transpec
