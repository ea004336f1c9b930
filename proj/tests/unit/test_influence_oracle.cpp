#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "transpec/errors.hpp"
#include "transpec/influence_oracle.hpp"
#include "transpec/quadrature.hpp"
#include "transpec/rng.hpp"

using namespace transpec;

namespace {

double npdf(double t) { return 0.3989422804014327 * std::exp(-0.5 * t * t); }
double ncdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

ModelOracle make_oracle(double theta0, VWeightKind kind = VWeightKind::Smooth) {
  VWeight v;
  v.kind = kind;
  v.support = {{0.1, 0.9}};
  return ModelOracle(OracleModel{}, normalize(make_family("yeo-johnson"), {theta0}), v);
}

}  // namespace

TEST_CASE("oracle closed forms") {
  const ModelOracle o = make_oracle(0.5);
  CHECK(o.t_s(0.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(o.t_s(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(o.q(o.t_s(0.37)) == doctest::Approx(0.37).epsilon(1e-10));
  // mass of f_{U,X} over an interior u band; the density is unbounded at the lower edge of U
  const Rule X = composite_gauss_legendre(0.0, 1.0, 8, 8);
  const double ua = o.t_s(-0.5), ub = o.t_s(3.5);
  double total = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double x = X.nodes[i];
    total += X.weights[i] * integrate_adaptive([&](double u) { return o.joint_density(u, x); }, ua, ub, 1e-11, 1e-10);
  }
  CHECK(total == doctest::Approx(o.cdf_s(3.5) - o.cdf_s(-0.5)).epsilon(1e-6));
  // S = 4X − 1 + ε: F_S by direct quadrature
  for (double s : {-2.0, 0.5, 3.0}) {
    const double direct = integrate_adaptive([&](double x) { return ncdf(s - o.g(x)); }, 0.0, 1.0, 1e-12, 1e-12);
    CHECK(o.cdf_s(s) == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("d_terms identities and finite differences") {
  const ModelOracle o = make_oracle(1.0);
  for (double u : {0.2, 0.5, 0.8})
    for (double x : {0.25, 0.5, 0.7}) {
      const DTerms d = d_terms(o, u, x);
      const double s = o.q(u);
      CHECK(d.pu * o.f_x(x) * o.phi_1_s(s, x) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(d.f1 == doctest::Approx(-o.phi_s(s, x) * d.p1).epsilon(1e-12));
      const double e = 1e-5;
      const double fd_x = (o.phi_s(s, x + e) - o.phi_s(s, x - e)) / (2 * e);
      const double fd_u = (o.phi_s(o.q(u + e), x) - o.phi_s(o.q(u - e), x)) / (2 * e);
      CHECK(o.phi_1_s(s, x) == doctest::Approx(fd_x).epsilon(1e-4));
      CHECK(o.phi_u_s(s, x) == doctest::Approx(fd_u).epsilon(1e-4));
      // identity h: Φ(u, x) = N(Q(u) − g(x))
      CHECK(o.phi_s(s, x) == doctest::Approx(ncdf(s - o.g(x))).epsilon(1e-14));
    }
}

TEST_CASE("delta_v empty-integral cases") {
  const ModelOracle o = make_oracle(1.0);
  const OraclePoint z = o.point_from_u(0.7, 0.4);
  for (VTilde vt : {VTilde::V1, VTilde::V2}) CHECK(delta_v(o, vt, 1.0, 0.0, z) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  const OraclePoint zm = o.point_from_u(0.5, 0.5);
  CHECK(std::isfinite(delta_v(o, VTilde::V1, 1.0, 0.5, zm)));
}

TEST_CASE("generic and closed-form psi agree") {
  for (double th : {0.5, 1.0}) {
    const ModelOracle o = make_oracle(th);
    Rng rng(4, {0});
    for (int k = 0; k < 6; ++k) {
      const OraclePoint z = o.draw(rng);
      for (double u : {0.25, 0.6}) {
        const double a = psi(o, z, u), b = psi_closed(o, z, u);
        CHECK(std::abs(a - b) <= 1e-5 * (1.0 + std::abs(b)));
      }
    }
  }
}

TEST_CASE("psi has mean zero") {
  const ModelOracle o = make_oracle(1.0);
  Rng rng(2024, {5});
  const std::vector<double> us{0.25, 0.5, 0.75};
  std::vector<double> s_grid;
  for (double u : us) s_grid.push_back(o.q(u));
  std::vector<double> sum(3, 0.0), sum2(3, 0.0);
  const int draws = 5000;
  for (int i = 0; i < draws; ++i) {
    const OraclePoint z = o.draw(rng);
    const auto v = psi_on_grid(o, z, s_grid);
    for (std::size_t k = 0; k < 3; ++k) {
      sum[k] += v[k];
      sum2[k] += v[k] * v[k];
    }
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const double m = sum[k] / draws;
    const double sd = std::sqrt(sum2[k] / draws - m * m);
    CHECK(std::abs(m) <= 3.0 * sd / std::sqrt(static_cast<double>(draws)));
  }
}

TEST_CASE("psi is the Gateaux derivative of the target functional") {
  // contamination: X ~ triweight on [0.3, 0.7], S | X ~ N(0.8 + 1.5x, 0.7²)
  const ModelOracle o = make_oracle(1.0);
  constexpr double c = 0.5, r = 0.2, tau = 0.7;
  auto gx = [&](double x) {
    const double t = (x - c) / r;
    return std::abs(t) >= 1 ? 0.0 : 35.0 / 32.0 * std::pow(1 - t * t, 3) / r;
  };
  auto gx1 = [&](double x) {
    const double t = (x - c) / r;
    return std::abs(t) >= 1 ? 0.0 : 35.0 / 32.0 * 3 * std::pow(1 - t * t, 2) * (-2 * t) / (r * r);
  };
  auto mu = [](double x) { return 0.8 + 1.5 * x; };
  auto A = [&](double eps, double q, double x) {
    const double f = (1 - eps) + eps * gx(x), f1 = eps * gx1(x);
    auto ratio = [&](double s) {
      const double t = s - o.g(x), tt = (s - mu(x)) / tau;
      const double p = (1 - eps) * ncdf(t) + eps * gx(x) * ncdf(tt);
      const double ps = (1 - eps) * npdf(t) + eps * gx(x) * npdf(tt) / tau;
      const double px = (1 - eps) * npdf(t) * (-4.0) + eps * (gx1(x) * ncdf(tt) + gx(x) * npdf(tt) * (-1.5 / tau));
      return (ps / f) / ((px * f - p * f1) / (f * f));
    };
    const Rule R = composite_gauss_legendre(std::min(0.0, q), std::max(0.0, q), 16, 8);
    double acc = 0;
    for (std::size_t k = 0; k < R.size(); ++k) acc += R.weights[k] * ratio(R.nodes[k]);
    return q >= 0 ? acc : -acc;
  };
  auto H = [&](double eps, double sy) {
    const Rule R = composite_gauss_legendre(0.1, 0.9, 16, 8);
    double acc = 0;
    for (std::size_t k = 0; k < R.size(); ++k)
      acc += R.weights[k] * o.v_density(R.nodes[k]) * A(eps, sy, R.nodes[k]) / A(eps, 1.0, R.nodes[k]);
    return acc;
  };
  for (double sy : {-0.6, 0.3, 1.6}) {
    const double fd = (H(1e-4, sy) - H(-1e-4, sy)) / 2e-4;
    const Rule X = composite_gauss_legendre(0.3, 0.7, 16, 8);
    double eg = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      const double x = X.nodes[i];
      std::vector<double> br;
      for (int k = 0; k <= 128; ++k) br.push_back(mu(x) - 8 * tau + 16 * tau * k / 128.0);
      for (double b : {0.0, 1.0, sy})
        if (b > br.front() && b < br.back()) br.push_back(b);
      std::sort(br.begin(), br.end());
      const Rule S = piecewise_gauss_legendre(br, 6);
      double in = 0;
      for (std::size_t j = 0; j < S.size(); ++j) {
        const OraclePoint z = o.point_from_s(S.nodes[j], x);
        in += S.weights[j] * npdf((S.nodes[j] - mu(x)) / tau) / tau *
              psi_on_grid(o, z, std::span<const double>(&sy, 1))[0];
      }
      eg += X.weights[i] * gx(x) * in;
    }
    CHECK(H(0.0, sy) == doctest::Approx(sy).epsilon(1e-8));
    CHECK(eg == doctest::Approx(fd).epsilon(2e-3));
  }
}

TEST_CASE("limit-law objects") {
  LimitLawConfig cfg;
  const LimitLawObjects L(make_oracle(1.0), cfg);
  const Eigen::MatrixXd& G = L.gamma0();
  CHECK((G - G.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  const Interval sw = L.s_window();
  CHECK(G(1, 1) == doctest::Approx(L.oracle().cdf_s(sw.hi) - L.oracle().cdf_s(sw.lo)).epsilon(1e-8));

  Rng rng(77, {1});
  std::vector<OraclePoint> z;
  for (int i = 0; i < 40; ++i) z.push_back(L.oracle().draw(rng));
  Eigen::MatrixXd gram(40, 40);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) gram(i, j) = L.zeta(z[i], z[j]);
  CHECK((gram - gram.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + gram.cwiseAbs().maxCoeff()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(gram);
  CHECK(eg.eigenvalues().minCoeff() >= -1e-6 * gram.trace());
  CHECK(L.b_const() > 0.0);

  // E[φ(Z)] = 0 by Monte Carlo
  const std::size_t draws = 3000;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L.dim()));
  Eigen::VectorXd s2 = s1;
  for (std::size_t i = 0; i < draws; ++i) {
    const Eigen::VectorXd p = L.phi(L.oracle().draw(rng));
    s1 += p;
    s2 += p.cwiseProduct(p);
  }
  for (Eigen::Index k = 0; k < s1.size(); ++k) {
    const double m = s1[k] / draws;
    const double sd = std::sqrt(s2[k] / draws - m * m);
    CHECK(std::abs(m) <= 3.5 * sd / std::sqrt(static_cast<double>(draws)));
  }
}

TEST_CASE("null direction gives zero shift") {
  const LimitLawObjects L(make_oracle(1.0), LimitLawConfig{}, [](double) { return 0.0; });
  CHECK(L.c_const() == 0.0);
  for (double s : {-0.5, 0.5, 2.0}) CHECK(L.rbar(s) == 0.0);
  Rng rng(3, {0});
  CHECK(L.zeta_tilde(L.oracle().draw(rng)) == 0.0);
  // a direction inside span(R) is absorbed by the projection
  const LimitLawObjects A(make_oracle(1.0), LimitLawConfig{}, [](double y) { return 2.0 * y - 0.3; });
  CHECK(A.c_const() <= 1e-12);
  const LimitLawObjects C(make_oracle(1.0), LimitLawConfig{}, [](double y) { return y * y * y; });
  CHECK(C.c_const() > 0.0);
}

TEST_CASE("limit quantile simulation") {
  const std::vector<double> zero(5, 0.0);
  CHECK(simulate_limit_quantile(zero, 1.0, 0.05, 1000, 1) == 0.0);
  const std::vector<double> one{2.0};
  const double q = simulate_limit_quantile(one, 1.0, 0.05, 200000, 7);
  CHECK(q == doctest::Approx(2.0 * 3.841458820694124).epsilon(0.02));
  const double q2 = simulate_limit_quantile(one, 1.5, 0.05, 200000, 7);
  CHECK(q2 == doctest::Approx(2.25 * q).epsilon(1e-12));
  CHECK(simulate_limit_quantile(one, 1.0, 0.05, 1000, 3, std::nullopt, 1) ==
        simulate_limit_quantile(one, 1.0, 0.05, 1000, 3, std::nullopt, 4));
}

TEST_CASE("oracle input checks") {
  VWeight v;
  v.support = {{-0.5, 0.9}};
  CHECK_THROWS_AS(ModelOracle(OracleModel{}, normalize(make_family("yeo-johnson"), {1.0}), v), Error);
}
