#include "transpec/influence_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "transpec/bootstrap.hpp"
#include "transpec/errors.hpp"
#include "transpec/parallel.hpp"
#include "transpec/quadrature.hpp"

namespace transpec {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double norm_pdf(double t) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * t * t); }
double norm_cdf(double t) noexcept { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }
// ∫_{−∞}^t N.
double norm_cdf_integral(double t) noexcept { return t * norm_cdf(t) + norm_pdf(t); }

}  // namespace

double mills_ratio(double t) noexcept {
  const double x = t / std::numbers::sqrt2;
  if (x < 25.0) return std::sqrt(std::numbers::pi / 2.0) * std::erfc(x) * std::exp(x * x);
  const double r = 1.0 / (x * x);
  const double erfcx = (1.0 - 0.5 * r + 0.75 * r * r - 1.875 * r * r * r) / (x * std::sqrt(std::numbers::pi));
  return std::sqrt(std::numbers::pi / 2.0) * erfcx;
}

// ---------------------------------------------------------------- oracle

ModelOracle::ModelOracle(OracleModel model, NormalizedTransform h, VWeight v)
    : model_(model), h_(std::move(h)), v_(std::move(v)) {
  if (!(model_.x_support.length() > 0.0)) fail(ErrorKind::InvalidConfig, "oracle: empty covariate support");
  if (!(model_.sigma > 0.0)) fail(ErrorKind::InvalidConfig, "oracle: sigma must be positive");
  if (model_.slope == 0.0) fail(ErrorKind::InvalidConfig, "oracle: regression slope must be nonzero");
  if (v_.support.size() != 1) fail(ErrorKind::InvalidConfig, "oracle: v needs exactly one covariate interval");
  const Interval vs = v_.support[0];
  if (!(vs.lo >= model_.x_support.lo && vs.hi <= model_.x_support.hi && vs.length() > 0.0))
    fail(ErrorKind::InvalidConfig, "oracle: v support must lie inside the covariate support");
  f_s0_ = cdf_s(0.0);
  d_u_ = cdf_s(1.0) - f_s0_;
  if (!(d_u_ > 0.0)) fail(ErrorKind::DegenerateAnchors, "oracle: F_S(1) = F_S(0)");
}

double ModelOracle::f_x(double x) const noexcept {
  return model_.x_support.contains(x) ? 1.0 / model_.x_support.length() : 0.0;
}

double ModelOracle::v_density(double x) const noexcept { return v_.density(std::span<const double>(&x, 1)); }
double ModelOracle::v_density_d1(double x) const noexcept {
  return v_.density_d1(std::span<const double>(&x, 1));
}

double ModelOracle::cdf_s(double s) const noexcept {
  const auto& m = model_;
  const double ta = (s - g(m.x_support.lo)) / m.sigma;
  const double tb = (s - g(m.x_support.hi)) / m.sigma;
  return m.sigma / (m.slope * m.x_support.length()) * (norm_cdf_integral(ta) - norm_cdf_integral(tb));
}

double ModelOracle::density_s(double s) const noexcept {
  const auto& m = model_;
  const double ta = (s - g(m.x_support.lo)) / m.sigma;
  const double tb = (s - g(m.x_support.hi)) / m.sigma;
  return (norm_cdf(ta) - norm_cdf(tb)) / (m.slope * m.x_support.length());
}

double ModelOracle::q(double u) const {
  const double target = f_s0_ + u * d_u_;
  if (!(target > 0.0 && target < 1.0)) fail(ErrorKind::InvalidConfig, "oracle: u outside the range of U");
  const double g_lo = std::min(g(model_.x_support.lo), g(model_.x_support.hi));
  const double g_hi = std::max(g(model_.x_support.lo), g(model_.x_support.hi));
  InvertOptions opt;
  opt.tolerance = 1e-14;
  return invert_monotone([this](double s) { return cdf_s(s); }, target,
                         {g_lo - 3.0 * model_.sigma, g_hi + 3.0 * model_.sigma}, opt);
}

double ModelOracle::phi_s(double s, double x) const noexcept { return norm_cdf((s - g(x)) / model_.sigma); }

double ModelOracle::phi_u_s(double s, double x) const noexcept {
  return norm_pdf((s - g(x)) / model_.sigma) * q_prime_at_s(s) / model_.sigma;
}

double ModelOracle::phi_1_s(double s, double x) const noexcept {
  return -model_.slope * norm_pdf((s - g(x)) / model_.sigma) / model_.sigma;
}

double ModelOracle::joint_density(double u, double x) const { return f_x(x) * phi_u_s(q(u), x); }

OraclePoint ModelOracle::point_from_s(double s, double x) const { return {x, s, t_s(s), h_.inverse(s)}; }

OraclePoint ModelOracle::point_from_u(double u, double x) const {
  const double s = q(u);
  return {x, s, u, h_.inverse(s)};
}

OraclePoint ModelOracle::draw(Rng& rng) const {
  const double x = rng.uniform(model_.x_support.lo, model_.x_support.hi);
  const double s = g(x) + model_.sigma * rng.normal();
  return point_from_s(s, x);
}

std::vector<OraclePoint> ModelOracle::sample(std::size_t n, Rng& rng) const {
  std::vector<OraclePoint> out(n);
  for (auto& p : out) p = draw(rng);
  return out;
}

Interval ModelOracle::u0_range(Interval y_window, double pad) const {
  return {t_s(h_(y_window.lo)) - pad, t_s(h_(y_window.hi)) + pad};
}

// ---------------------------------------------------------------- D terms

DTerms d_terms(const ModelOracle& oracle, double u, double x) {
  const double s = oracle.q(u);
  const double p = oracle.phi_s(s, x);
  const double pu = oracle.phi_u_s(s, x);
  const double p1 = oracle.phi_1_s(s, x);
  if (std::abs(p1) < 1e-10) fail(ErrorKind::SingularPhi1, "oracle: |Phi_1| below 1e-10");
  const double fx = oracle.f_x(x);
  const double fx1 = oracle.f_x_d1(x);
  DTerms d;
  d.p0 = pu * fx1 / (p1 * p1 * fx * fx);
  d.pu = 1.0 / (fx * p1);
  d.p1 = -pu / (fx * p1 * p1);
  d.f0 = -pu * p * fx1 / (p1 * p1 * fx * fx);
  d.f1 = pu * p / (p1 * p1 * fx);
  return d;
}

// ---------------------------------------------------------------- δ and ψ

namespace {

double v_tilde_at(const ModelOracle& o, VTilde kind, double s0, double x) {
  const double v = o.v_density(x);
  const double s1_0 = o.s1_s(s0);
  if (kind == VTilde::V1) return v / s1_0;
  const double s1_1 = o.s1_s(1.0);
  return v * s1_0 / (s1_1 * s1_1);
}

double indicator_diff(double s_j, double s) { return (s_j <= s ? 1.0 : 0.0) - (s_j <= 0.0 ? 1.0 : 0.0); }

// Richardson-extrapolated central difference.
template <class F>
double derivative(F&& f, double x, double step) {
  const double d1 = (f(x + step) - f(x - step)) / (2.0 * step);
  const double d2 = (f(x + 0.5 * step) - f(x - 0.5 * step)) / step;
  return (4.0 * d2 - d1) / 3.0;
}

}  // namespace

double delta_v(const ModelOracle& o, VTilde kind, double u0, double u, const OraclePoint& z) {
  const double s0 = o.q(u0);
  const double su = o.q(u);
  const double xj = z.x;
  const double fx = o.f_x(xj);
  const double vt_j = v_tilde_at(o, kind, s0, xj);
  const Interval vs = o.v().support[0];

  // Direct part: the jump of F̂ at Z_j and the f̂_X normalization.
  double direct = 0.0;
  if (vt_j != 0.0) {
    const double pu_j = 1.0 / (fx * o.phi_1_s(z.s, xj));
    direct = vt_j * (indicator_diff(z.s, su) * pu_j - o.s1_s(su) / fx);
  }

  // Conditional-CDF part, integrated by parts in x and written over r = 𝒯_S(s).
  double cond = 0.0;
  if (xj > vs.lo && xj < vs.hi && su != 0.0) {
    const double step = 1e-3 * vs.length();
    auto kernel = [&](double s) {
      auto core = [&](double x) {
        const double p1 = o.phi_1_s(s, x);
        return v_tilde_at(o, kind, s0, x) * o.phi_u_s(s, x) / (p1 * p1);
      };
      const double dx = derivative(core, xj, std::min(step, 0.5 * std::min(xj - vs.lo, vs.hi - xj)));
      const double ind = z.s <= s ? 1.0 : 0.0;
      return dx * (ind - o.phi_s(s, xj)) / fx / o.q_prime_at_s(s);
    };
    const double lo = std::min(0.0, su), hi = std::max(0.0, su);
    double acc = 0.0;
    try {
      if (z.s > lo && z.s < hi) {
        acc = integrate_adaptive(kernel, lo, z.s, 1e-9, 1e-8, "delta_v summand 2") +
              integrate_adaptive(kernel, z.s, hi, 1e-9, 1e-8, "delta_v summand 2");
      } else {
        acc = integrate_adaptive(kernel, lo, hi, 1e-9, 1e-8, "delta_v summand 2");
      }
    } catch (const Error& e) {
      fail(ErrorKind::QuadratureFailure, e.what());
    }
    cond = su >= 0.0 ? acc : -acc;
  }

  // Rescaling part: the effect of estimating U through T̂.
  const double kappa = (indicator_diff(z.s, su) - u * indicator_diff(z.s, 1.0)) / o.d_u();
  double rescale = 0.0;
  if (kappa != 0.0) {
    const Rule rule = composite_gauss_legendre(vs.lo, vs.hi, 8, 8);
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const double x = rule.nodes[k];
      acc += rule.weights[k] * v_tilde_at(o, kind, s0, x) * o.phi_u_s(su, x) / o.phi_1_s(su, x);
    }
    rescale = -kappa * acc;
  }
  return direct + cond + rescale;
}

double psi(const ModelOracle& o, const OraclePoint& z, double u) {
  const double fu = u * o.d_u();  // F_U(u) − F_U(0)
  const double d = o.d_u();
  const double qp = o.q_prime(u);
  const double su = o.q(u);
  return delta_v(o, VTilde::V1, 1.0, u, z) - delta_v(o, VTilde::V2, u, 1.0, z) +
         qp / d * (indicator_diff(z.s, su) - fu) - qp * fu / (d * d) * (indicator_diff(z.s, 1.0) - d);
}

std::vector<double> psi_on_grid(const ModelOracle& o, const OraclePoint& z, std::span<const double> s_grid) {
  std::vector<double> out(s_grid.size(), 0.0);
  const double v = o.v_density(z.x);
  const double v1 = o.v_density_d1(z.x);
  if (v == 0.0 && v1 == 0.0) return out;
  const auto& m = o.model();
  const double len = m.x_support.length();
  const double gj = o.g(z.x);
  const double sig = m.sigma;
  const double a = m.slope;

  // β(q) = ∫₀^q b(s) ds, tabulated on the grid ∪ {0, 1, S_j}.
  auto integrand = [&](double s) {
    const double e = s - gj;
    const double mills = z.s <= s ? mills_ratio(e / sig) : -mills_ratio(-e / sig);
    return len / a * sig * (-v1 + a * v * e / (sig * sig)) * mills;
  };
  std::vector<double> pts(s_grid.begin(), s_grid.end());
  pts.push_back(0.0);
  pts.push_back(1.0);
  pts.push_back(z.s);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const Rule& gl = gauss_legendre(4);
  std::vector<double> cum(pts.size(), 0.0);
  const auto zero = static_cast<std::size_t>(std::lower_bound(pts.begin(), pts.end(), 0.0) - pts.begin());
  auto cell = [&](double lo, double hi) {
    if (z.s > lo && z.s < hi) fail(ErrorKind::Internal, "psi_on_grid: cell straddles S_j");
    const double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
    double acc = 0.0;
    for (std::size_t k = 0; k < gl.size(); ++k) acc += gl.weights[k] * integrand(c + r * gl.nodes[k]);
    return acc * r;
  };
  for (std::size_t i = zero + 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + cell(pts[i - 1], pts[i]);
  for (std::size_t i = zero; i-- > 0;) cum[i] = cum[i + 1] - cell(pts[i], pts[i + 1]);
  auto beta = [&](double s) {
    const auto i = static_cast<std::size_t>(std::lower_bound(pts.begin(), pts.end(), s) - pts.begin());
    return cum[i];
  };
  const double beta1 = beta(1.0);
  const double in1 = indicator_diff(z.s, 1.0);
  const double phi_j = norm_pdf((z.s - gj) / sig);
  const double kj = phi_j > 0.0 ? v * len * sig / phi_j : 0.0;
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    const double s = s_grid[i];
    const double ind = indicator_diff(z.s, s) - s * in1;
    out[i] = (ind != 0.0 ? kj * ind : 0.0) + beta(s) - s * beta1;
  }
  return out;
}

double psi_closed(const ModelOracle& o, const OraclePoint& z, double u) {
  const double s = o.q(u);
  return psi_on_grid(o, z, std::span<const double>(&s, 1))[0];
}

// ---------------------------------------------------------------- limit law

LimitLawObjects::LimitLawObjects(ModelOracle oracle, LimitLawConfig config,
                                 std::function<double(double)> r0)
    : oracle_(std::move(oracle)), r0_(std::move(r0)) {
  const ModelOracle& o = oracle_;
  if (config.y_window) {
    s_window_ = {o.h()(config.y_window->lo), o.h()(config.y_window->hi)};
  } else {
    if (!(config.s_tail > 0.0 && config.s_tail < 0.5))
      fail(ErrorKind::InvalidConfig, "limit_law.s_tail must be in (0, 0.5)");
    auto inv = [&](double p) {
      InvertOptions opt;
      opt.tolerance = 1e-13;
      return invert_monotone([&](double s) { return o.cdf_s(s); }, p, {-1.0, 1.0}, opt);
    };
    s_window_ = {inv(config.s_tail), inv(1.0 - config.s_tail)};
  }
  if (!(s_window_.length() > 0.0)) fail(ErrorKind::InvalidConfig, "limit_law: empty weight window");

  std::vector<double> breaks;
  for (std::size_t k = 0; k <= config.s_panels; ++k)
    breaks.push_back(s_window_.lo + s_window_.length() * static_cast<double>(k) / static_cast<double>(config.s_panels));
  for (double anchor : {0.0, 1.0})
    if (s_window_.lo < anchor && anchor < s_window_.hi) breaks.push_back(anchor);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               breaks.end());
  const Rule rule = piecewise_gauss_legendre(breaks, config.s_points);
  s_nodes_ = rule.nodes;
  s_mass_.resize(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) s_mass_[q] = rule.weights[q] * o.density_s(s_nodes_[q]);

  const auto& fam = o.h().family();
  const std::size_t dt = fam.theta_dim();
  const Eigen::Index p = static_cast<Eigen::Index>(2 + dt);
  const auto M = static_cast<Eigen::Index>(s_nodes_.size());
  r_nodes_.resize(p, M);
  for (Eigen::Index q = 0; q < M; ++q) r_nodes_.col(q) = R(s_nodes_[static_cast<std::size_t>(q)]);
  gamma0_ = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index q = 0; q < M; ++q)
    gamma0_ += s_mass_[static_cast<std::size_t>(q)] * r_nodes_.col(q) * r_nodes_.col(q).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma0_);
  if (!(es.eigenvalues().minCoeff() > config.gamma_floor * gamma0_.trace()))
    fail(ErrorKind::NonPositiveDefinite, "limit_law: Gamma0 fails its eigenvalue floor");
  gamma0_ldlt_.compute(gamma0_);
  proj_ = gamma0_ldlt_.solve(r_nodes_);

  if (r0_) {
    rbar_nodes_.resize(M);
    Eigen::VectorXd moment = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd r0v(M);
    for (Eigen::Index q = 0; q < M; ++q) {
      const double s = s_nodes_[static_cast<std::size_t>(q)];
      r0v[q] = r0_(o.h().inverse(s));
      moment += s_mass_[static_cast<std::size_t>(q)] * r0v[q] * r_nodes_.col(q);
    }
    rbar_coef_ = gamma0_ldlt_.solve(moment);
    c_ = 0.0;
    for (Eigen::Index q = 0; q < M; ++q) {
      rbar_nodes_[q] = r0v[q] - rbar_coef_.dot(r_nodes_.col(q));
      c_ += s_mass_[static_cast<std::size_t>(q)] * rbar_nodes_[q] * rbar_nodes_[q];
    }
  }
  compute_b(config);
}

Eigen::VectorXd LimitLawObjects::R(double s) const {
  const auto& h = oracle_.h();
  const auto& fam = h.family();
  const std::size_t dt = fam.theta_dim();
  Eigen::VectorXd r(static_cast<Eigen::Index>(2 + dt));
  r[0] = s;
  r[1] = 1.0;
  std::vector<double> grad(dt);
  fam.grad_theta(h.theta(), h.inverse(s), grad);
  for (std::size_t k = 0; k < dt; ++k) r[static_cast<Eigen::Index>(2 + k)] = -grad[k];
  return r;
}

Eigen::VectorXd LimitLawObjects::psi_row(const OraclePoint& z) const {
  const auto v = psi_on_grid(oracle_, z, s_nodes_);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd LimitLawObjects::phi(const OraclePoint& z) const {
  const Eigen::VectorXd ps = psi_row(z);
  const Eigen::Map<const Eigen::VectorXd> mass(s_mass_.data(), static_cast<Eigen::Index>(s_mass_.size()));
  return r_nodes_ * ps.cwiseProduct(mass);
}

Eigen::VectorXd LimitLawObjects::e_row(const OraclePoint& z) const {
  const Eigen::VectorXd ps = psi_row(z);
  const Eigen::Map<const Eigen::VectorXd> mass(s_mass_.data(), static_cast<Eigen::Index>(s_mass_.size()));
  const Eigen::VectorXd ph = r_nodes_ * ps.cwiseProduct(mass);
  return ps - proj_.transpose() * ph;
}

double LimitLawObjects::zeta(const OraclePoint& z1, const OraclePoint& z2) const {
  const Eigen::VectorXd e1 = e_row(z1);
  const Eigen::VectorXd e2 = e_row(z2);
  const Eigen::Map<const Eigen::VectorXd> mass(s_mass_.data(), static_cast<Eigen::Index>(s_mass_.size()));
  return (e1.cwiseProduct(mass)).dot(e2);
}

double LimitLawObjects::rbar(double s) const {
  if (!r0_) return 0.0;
  return r0_(oracle_.h().inverse(s)) - rbar_coef_.dot(R(s));
}

double LimitLawObjects::zeta_tilde(const OraclePoint& z) const {
  if (!r0_) return 0.0;
  const Eigen::VectorXd ps = psi_row(z);
  double acc = 0.0;
  for (std::size_t q = 0; q < s_mass_.size(); ++q)
    acc += s_mass_[q] * ps[static_cast<Eigen::Index>(q)] * rbar_nodes_[static_cast<Eigen::Index>(q)];
  return 2.0 * acc;
}

void LimitLawObjects::compute_b(const LimitLawConfig& config) {
  const ModelOracle& o = oracle_;
  const Interval vs = o.v().support[0];
  const Rule xr = composite_gauss_legendre(vs.lo, vs.hi, config.z_x_panels, config.z_x_points);
  const double fx = 1.0 / o.model().x_support.length();
  const double sig = o.model().sigma;
  const Eigen::Map<const Eigen::VectorXd> mass(s_mass_.data(), static_cast<Eigen::Index>(s_mass_.size()));
  double total = 0.0;
  for (std::size_t k = 0; k < xr.size(); ++k) {
    const double x = xr.nodes[k];
    const double gx = o.g(x);
    const double lo = gx - config.z_s_tail * sig, hi = gx + config.z_s_tail * sig;
    std::vector<double> br{lo, hi};
    for (double s : s_nodes_)
      if (s > lo && s < hi) br.push_back(s);
    for (double s : {0.0, 1.0})
      if (s > lo && s < hi) br.push_back(s);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    // Cells wider than σ/4 are split so the Gaussian factor stays well resolved.
    std::vector<double> fine{br.front()};
    for (std::size_t i = 1; i < br.size(); ++i) {
      const double w = br[i] - br[i - 1];
      const auto pieces = static_cast<std::size_t>(std::ceil(w / (0.25 * sig)));
      for (std::size_t p = 1; p <= pieces; ++p)
        fine.push_back(br[i - 1] + w * static_cast<double>(p) / static_cast<double>(pieces));
    }
    const Rule sr = piecewise_gauss_legendre(fine, config.z_s_points);
    double inner = 0.0;
    for (std::size_t j = 0; j < sr.size(); ++j) {
      const double s = sr.nodes[j];
      const Eigen::VectorXd e = e_row(o.point_from_s(s, x));
      inner += sr.weights[j] * norm_pdf((s - gx) / sig) / sig * e.cwiseProduct(mass).dot(e);
    }
    total += xr.weights[k] * fx * inner;
  }
  b_ = total;
}

// ---------------------------------------------------------------- simulation of the limit

double simulate_limit_quantile(std::span<const double> eigenvalues, double c10, double alpha, std::size_t n_sim,
                               std::uint64_t seed, const std::optional<LocalShift>& shift, std::size_t workers) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::InvalidConfig, "alpha must be in (0, 1)");
  if (n_sim == 0) fail(ErrorKind::InvalidConfig, "limit law: n_sim must be positive");
  if (shift && shift->cov.size() > eigenvalues.size())
    fail(ErrorKind::Internal, "limit law: covariance vector longer than the eigenvalue list");
  constexpr std::size_t chunk = 4096;
  const std::size_t chunks = (n_sim + chunk - 1) / chunk;
  std::vector<double> draws(n_sim);
  double resid_sd = 0.0;
  if (shift) {
    double explained = 0.0;
    for (double c : shift->cov) explained += c * c;
    resid_sd = std::sqrt(std::max(0.0, shift->var_w0 - explained));
  }
  const double scale = c10 * c10;
  parallel_for(chunks, workers, [&](std::size_t c) {
    Rng rng(seed, {0x4E59, c});
    const std::size_t end = std::min(n_sim, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) {
      double acc = 0.0, w0 = 0.0;
      for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
        const double w = rng.normal();
        acc += eigenvalues[k] * w * w;
        if (shift && k < shift->cov.size()) w0 += shift->cov[k] * w;
      }
      if (shift) acc += w0 + resid_sd * rng.normal() + shift->c;
      draws[i] = scale * acc;
    }
  });
  return bootstrap_quantile(draws, 1.0 - alpha);
}

NystromResult nystrom_limit_quantile(const LimitLawObjects& objects, std::size_t n_nodes, std::size_t n_sim,
                                     double alpha, std::uint64_t seed, std::size_t workers) {
  if (n_nodes < 50) fail(ErrorKind::InvalidConfig, "limit law: at least 50 Nystrom nodes are required");
  const ModelOracle& o = objects.oracle();
  Rng rng(seed, {0x4E5F, 0});
  const std::vector<OraclePoint> z = o.sample(n_nodes, rng);
  const auto N = static_cast<Eigen::Index>(n_nodes);
  const auto M = static_cast<Eigen::Index>(objects.s_nodes().size());
  Eigen::MatrixXd A(N, M);
  std::vector<double> zt(n_nodes, 0.0);
  Eigen::VectorXd root(M);
  for (Eigen::Index q = 0; q < M; ++q) root[q] = std::sqrt(objects.s_mass()[static_cast<std::size_t>(q)]);
  parallel_for(n_nodes, workers, [&](std::size_t i) {
    A.row(static_cast<Eigen::Index>(i)) = objects.e_row(z[i]).cwiseProduct(root).transpose();
    if (objects.has_alternative()) zt[i] = objects.zeta_tilde(z[i]);
  });
  const Eigen::MatrixXd gram = A * A.transpose() / static_cast<double>(n_nodes);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  if (es.info() != Eigen::Success) fail(ErrorKind::Internal, "limit law: eigen-decomposition failed");

  NystromResult res;
  res.n_nodes = n_nodes;
  res.b_const = objects.b_const();
  res.trace = gram.trace();
  res.min_eigenvalue = es.eigenvalues().minCoeff();
  if (res.min_eigenvalue < -1e-6 * res.trace)
    fail(ErrorKind::NonPositiveDefinite, "limit law: Gram matrix is not positive semi-definite");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = N; k-- > 0;) {
    const double l = es.eigenvalues()[k];
    if (l > 1e-14 * std::max(res.trace, 1e-300)) {
      res.eigenvalues.push_back(l);
      keep.push_back(k);
    }
  }
  if (objects.has_alternative()) {
    LocalShift sh;
    sh.c = objects.c_const();
    double var = 0.0;
    for (double t : zt) var += t * t;
    sh.var_w0 = var / static_cast<double>(n_nodes);
    for (Eigen::Index k : keep) {
      double cov = 0.0;
      for (Eigen::Index i = 0; i < N; ++i) cov += zt[static_cast<std::size_t>(i)] * es.eigenvectors()(i, k);
      sh.cov.push_back(cov / std::sqrt(static_cast<double>(n_nodes)));
    }
    res.shift = sh;
  }
  if (res.eigenvalues.empty() && !res.shift) {
    res.quantile = 0.0;
    return res;
  }
  res.quantile = simulate_limit_quantile(res.eigenvalues, objects.c10(), alpha, n_sim, seed, res.shift, workers);
  return res;
}

}  // namespace transpec
