#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "transpec/bootstrap.hpp"
#include "transpec/errors.hpp"
#include "transpec/rng.hpp"
#include "transpec/simulation.hpp"

using namespace transpec;

namespace {

double brute_quantile(const std::vector<double>& stats, double alpha) {
  double best = 1e300;
  for (double z : stats) {
    std::size_t count = 0;
    for (double s : stats) count += s <= z ? 1 : 0;
    if (static_cast<double>(count) / static_cast<double>(stats.size()) >= alpha) best = std::min(best, z);
  }
  return best;
}

const NormalizedTransform& identity() {
  static const NormalizedTransform id = normalize(make_family("yeo-johnson"), {1.0});
  return id;
}

}  // namespace

TEST_CASE("bootstrap quantile") {
  const std::vector<double> s{4.0, 2.0, 3.0, 1.0};
  CHECK(bootstrap_quantile(s, 0.5) == 2.0);
  CHECK(bootstrap_quantile(s, 0.999999) == 4.0);
  CHECK(bootstrap_quantile(s, 0.25) == 1.0);
  CHECK(bootstrap_quantile(s, 0.26) == 2.0);
  const std::vector<double> c(7, 3.5);
  for (double a : {0.01, 0.5, 0.95}) CHECK(bootstrap_quantile(c, a) == 3.5);
  Rng rng(99, {0});
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> v(1 + rng.index(60));
    for (double& x : v) x = std::floor(rng.uniform(0.0, 30.0));  // ties on purpose
    const double a = rng.uniform(0.001, 0.999);
    CHECK(bootstrap_quantile(v, a) == brute_quantile(v, a));
  }
  CHECK_THROWS_AS((void)bootstrap_quantile(std::vector<double>{}, 0.5), Error);
}

TEST_CASE("regression function small cases") {
  const Dataset d({0.0, 0.0, 0.0, 0.0}, {0.1, 0.4, 0.6, 0.9}, 1);
  const RegressionFn flat(d, {2.5, 2.5, 2.5, 2.5}, {0.3}, biweight_kernel());
  for (double x : {0.1, 0.33, 0.7, 1.5}) CHECK(flat(x) == doctest::Approx(2.5).epsilon(1e-15));

  const Dataset same({0.0, 0.0, 0.0}, {0.5, 0.5, 0.5}, 1);
  const RegressionFn avg(same, {1.0, 2.0, 6.0}, {0.2}, biweight_kernel());
  CHECK(avg(0.5) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(avg(0.61) == doctest::Approx(3.0).epsilon(1e-15));  // clamped to the hull

  // two points, bandwidth 2: weights K(0) and K(1/2) = K(0)·(3/4)²
  const Dataset two({0.0, 0.0}, {0.0, 1.0}, 1);
  const RegressionFn g2(two, {1.0, 5.0}, {2.0}, biweight_kernel());
  CHECK(g2(0.0) == doctest::Approx((1.0 + 0.5625 * 5.0) / 1.5625).epsilon(1e-14));
  CHECK(g2(1.0) == doctest::Approx((0.5625 * 1.0 + 5.0) / 1.5625).epsilon(1e-14));
  CHECK(g2(0.5) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("local-linear regression reproduces a line") {
  const Dataset d(std::vector<double>(11, 0.0), {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}, 1);
  std::vector<double> resp;
  for (std::size_t i = 0; i < d.n(); ++i) resp.push_back(4.0 * d.x(i) - 1.0);
  const RegressionFn ll(d, resp, {0.45}, biweight_kernel(), RegressionMethod::LocalLinear);
  for (double x : {0.0, 0.05, 0.33, 0.8, 1.0}) CHECK(ll(x) == doctest::Approx(4.0 * x - 1.0).epsilon(1e-12));
  // one point in the window: falls back to the clamped local mean
  const Dataset one({0.0, 0.0}, {0.0, 1.0}, 1);
  const RegressionFn fb(one, {2.0, 7.0}, {0.5}, biweight_kernel(), RegressionMethod::LocalLinear);
  CHECK(fb(0.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fb(1.0) == doctest::Approx(7.0).epsilon(1e-14));
}

TEST_CASE("residuals: hand case and centering") {
  const Dataset two({3.0, 1.0}, {0.0, 1.0}, 1);
  const RegressionFn g2 = estimate_g(two, identity(), 2.0);
  const double g0 = (3.0 + 0.5625 * 1.0) / 1.5625, g1 = (0.5625 * 3.0 + 1.0) / 1.5625;
  const auto e = residuals(two, identity(), g2);
  const double mean = ((3.0 - g0) + (1.0 - g1)) / 2.0;
  CHECK(e[0] == doctest::Approx(3.0 - g0 - mean).epsilon(1e-14));
  CHECK(e[1] == doctest::Approx(1.0 - g1 - mean).epsilon(1e-14));

  const Dataset d = gen_null(SimScenario{}, 5);
  const auto eps = residuals(d, identity(), estimate_g(d, identity()));
  CHECK(std::abs(std::accumulate(eps.begin(), eps.end(), 0.0) / static_cast<double>(eps.size())) <= 1e-14);

  std::vector<double> y(d.n(), 0.7);
  const Dataset constant(y, d.xs(), 1);
  for (double v : residuals(constant, identity(), estimate_g(constant, identity()))) CHECK(std::abs(v) <= 1e-14);
}

TEST_CASE("regression estimate under the linear truth") {
  SimScenario sc;
  sc.n = 400;
  const Dataset d = gen_null(sc, 31);
  const RegressionFn g = estimate_g(d, identity());
  for (double x : {0.3, 0.4, 0.5, 0.6, 0.7}) CHECK(std::abs(g(x) - (4.0 * x - 1.0)) <= 0.25);
}

TEST_CASE("extended transform pins and continuity") {
  const FamilyPtr yj = make_family("yeo-johnson");
  for (double th : {0.0, 0.5, 1.0, 1.7, 2.0}) {
    const ExtendedTransform h(normalize(yj, {th}), {-2.0, 3.0});
    CHECK(h.eval(0.0) == 0.0);
    CHECK(h.eval(1.0) == 1.0);
    for (double edge : {-2.0, 3.0}) {
      CHECK(h.eval(edge + 1e-9) == doctest::Approx(h.eval(edge - 1e-9)).epsilon(1e-7));
    }
    for (double y : {-6.0, -1.0, 0.4, 2.0, 9.0}) {
      bool ext = false;
      CHECK(h.inverse(h.eval(y), &ext) == doctest::Approx(y).epsilon(1e-9));
      CHECK(ext == (y < -2.0 || y > 3.0));
    }
  }
}

TEST_CASE("bootstrap draws: determinism and degenerate smoothing") {
  const Dataset d = gen_null(SimScenario{}, 7);
  const RegressionFn g = estimate_g(d, identity());
  const auto eps = residuals(d, identity(), g);
  const ExtendedTransform h(identity(), {-10.0, 10.0});
  BootstrapConfig cfg;
  cfg.seed = 42;
  const auto a = draw_bootstrap_sample(d, h, g, eps, cfg, 3);
  const auto b = draw_bootstrap_sample(d, h, g, eps, cfg, 3);
  const auto c = draw_bootstrap_sample(d, h, g, eps, cfg, 4);
  CHECK(a.data == b.data);
  CHECK_FALSE(a.data == c.data);

  cfg.a_n = 1e-300;
  cfg.b_n = 1e-300;
  const auto z = draw_bootstrap_sample(d, h, g, eps, cfg, 0);
  std::set<double> xs(d.xs().begin(), d.xs().end());
  for (std::size_t j = 0; j < z.data.n(); ++j) {
    CHECK(xs.count(z.data.x(j)) == 1);
    // identity h*: Y* = ĝ(X*) + ε*, with ε* one of the centered residuals
    const double e = z.data.y(j) - g(z.data.x(j));
    const double nearest = *std::min_element(eps.begin(), eps.end(), [&](double p, double q) {
      return std::abs(p - e) < std::abs(q - e);
    });
    CHECK(std::abs(nearest - e) <= 1e-12);
  }
}

TEST_CASE("residual smoothing adds a_n² to the variance") {
  const Dataset d = gen_null(SimScenario{}, 8);
  const RegressionFn g = estimate_g(d, identity());
  const auto eps = residuals(d, identity(), g);
  double var_eps = 0.0;
  for (double e : eps) var_eps += e * e;
  var_eps /= static_cast<double>(eps.size());
  const ExtendedTransform h(identity(), {-20.0, 20.0});
  for (double an : {0.2, 0.1, 0.05}) {
    BootstrapConfig cfg;
    cfg.m = 40000;
    cfg.a_n = an;
    cfg.b_n = 1e-300;
    cfg.seed = 1;
    const auto draw = draw_bootstrap_sample(d, h, g, eps, cfg, 0);
    std::vector<double> e(draw.data.n());
    double mean = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) mean += (e[j] = draw.data.y(j) - g(draw.data.x(j)));
    mean /= static_cast<double>(e.size());
    double var = 0.0, m4 = 0.0;
    for (double v : e) {
      var += (v - mean) * (v - mean);
      m4 += std::pow(v - mean, 4);
    }
    var /= static_cast<double>(e.size());
    m4 /= static_cast<double>(e.size());
    const double se = std::sqrt((m4 - var * var) / static_cast<double>(e.size()));
    CHECK(std::abs(var - (var_eps + an * an)) <= 4.0 * se);
  }
}

TEST_CASE("bootstrap statistic follows the compute_Tn path") {
  const Dataset d = gen_null(SimScenario{}, 9);
  const FamilyPtr yj = make_family("yeo-johnson");
  const TnResult a = bootstrap_statistic(d, *yj, NptConfig{}, TestConfig{});
  const NptEstimate est = estimate_h(d, NptConfig{});
  const TnResult b = compute_Tn(d, est, *yj, WeightFn::from_sample(WeightSpec{}, d.ys()), TestConfig{});
  CHECK(a.t_n == b.t_n);
  CHECK(a.gamma.theta == b.gamma.theta);
}

TEST_CASE("gof_test determinism across workers and monotone decisions") {
  const Dataset d = gen_null(SimScenario{}, 10);
  GofConfig cfg;
  cfg.bootstrap.B = 60;
  cfg.bootstrap.seed = 5;
  cfg.alphas = {0.05, 0.10, 0.5};
  const GofReport a = gof_test(d, make_family("yeo-johnson"), cfg);
  cfg.workers = 3;
  const GofReport b = gof_test(d, make_family("yeo-johnson"), cfg);
  CHECK(a.statistics == b.statistics);
  CHECK(a.quantiles == b.quantiles);
  CHECK(a.t_n == b.t_n);
  CHECK(a.p_star == b.p_star);
  CHECK(a.quantiles[0] >= a.quantiles[1]);
  CHECK(a.quantiles[1] >= a.quantiles[2]);
  for (std::size_t k = 0; k + 1 < a.reject.size(); ++k)
    if (a.reject[k]) CHECK(a.reject[k + 1]);
  CHECK(a.b_used + a.diagnostics.failed + a.diagnostics.anchor_drops == 60);
}

TEST_CASE("bootstrap config validation") {
  BootstrapConfig c;
  c.B = 10;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.a_n = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
}
