#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "transpec/errors.hpp"
#include "transpec/relevant_test.hpp"
#include "transpec/simulation.hpp"

using namespace transpec;

namespace {

class ShiftedFamily final : public ParametricFamily {
 public:
  ShiftedFamily(FamilyPtr base, double b) : base_(std::move(base)), b_(b) {}
  std::string name() const override { return "shifted"; }
  std::size_t theta_dim() const override { return 1; }
  std::vector<Interval> theta_box() const override { return base_->theta_box(); }
  double eval(std::span<const double> t, double y) const override { return base_->eval(t, y) + b_; }
  void grad_theta(std::span<const double> t, double y, std::span<double> out) const override {
    base_->grad_theta(t, y, out);
  }
  void hess_theta(std::span<const double> t, double y, std::span<double> out) const override {
    base_->hess_theta(t, y, out);
  }

 private:
  FamilyPtr base_;
  double b_;
};

Dataset alt_data(std::size_t n, std::uint64_t seed) {
  SimScenario sc;
  sc.theta0 = 1.0;
  sc.n = n;
  sc.alternative = {AltKind::Fixed, RId::R3, 1.0, 1.0};
  return gen_fixed_alternative(sc, seed);
}

}  // namespace

TEST_CASE("normal quantile and statistic") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(normal_quantile(0.05) == doctest::Approx(-1.6448536269514722).epsilon(1e-12));
  CHECK(relevant_statistic(5.0, 0.05, 0.25, 100) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(relevant_statistic(1.0, 0.5, 0.25, 100) == doctest::Approx((1.0 - 50.0) / 5.0).epsilon(1e-15));
  double prev = 1e300;
  for (double eta = 0.0; eta < 1.0; eta += 0.05) {
    const double s = relevant_statistic(3.0, eta, 0.4, 100);
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("block variance: degenerate and hand cases") {
  const std::vector<double> h{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const std::vector<std::vector<double>> same{h, h, h};
  const std::vector<double> resid{1.0, 1.0, 1.0, 1.0, -1.0, 1.0}, w(6, 1.0);
  CHECK(sigma2_from_blocks(h, same, resid, w, 2, 1.0) == 0.0);

  // single perturbed block, m_n = 2: term one only
  std::vector<std::vector<double>> moved{h, h, h};
  for (double& v : moved[1]) v += 0.5;
  const double t1 = 2.0 * std::sqrt(2.0) / 6.0 * 0.5 * std::accumulate(resid.begin(), resid.end(), 0.0);
  CHECK(sigma2_from_blocks(h, moved, resid, w, 2, 1.0) == doctest::Approx(t1 * t1 / 3.0).epsilon(1e-14));
  const std::vector<double> r2{1.0, 1.0, 2.0, 2.0, 1.0, 1.0};
  for (double& v : moved[1]) v -= 0.5;
  // term two: block sums of r² − mean(r²) over √m_n, mean(r²) = 2
  const double a = (1 + 1 - 4) / std::sqrt(2.0), b = (4 + 4 - 4) / std::sqrt(2.0);
  CHECK(sigma2_from_blocks(h, moved, r2, w, 2, 1.0) == doctest::Approx((a * a + b * b + a * a) / 3.0).epsilon(1e-14));
}

TEST_CASE("relevant test on data") {
  const Dataset d = alt_data(200, 3);
  RelevantConfig cfg;
  cfg.m_n = 50;
  const FamilyPtr yj = make_family("yeo-johnson");
  const RelevantReport base = relevant_test(d, yj, cfg, NptConfig{}, TestConfig{});
  CHECK(base.sigma2_hat > 0.0);
  CHECK(base.q_blocks == 4);
  CHECK(base.m_hat == doctest::Approx(base.t_n / 200.0).epsilon(1e-15));

  cfg.eta = base.m_hat;
  const RelevantReport at = relevant_test(d, yj, cfg, NptConfig{}, TestConfig{});
  CHECK(at.statistic == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK_FALSE(at.reject);

  cfg.eta = 100.0 * base.m_hat + 1.0;
  const RelevantReport far = relevant_test(d, yj, cfg, NptConfig{}, TestConfig{});
  CHECK(far.reject);
  CHECK(far.sigma2_hat == base.sigma2_hat);

  cfg.eta = 0.0;
  cfg.permute = true;
  cfg.seed = 4;
  const RelevantReport perm = relevant_test(d, yj, cfg, NptConfig{}, TestConfig{});
  CHECK(perm.sigma2_hat != base.sigma2_hat);
  cfg.workers = 3;
  const RelevantReport perm3 = relevant_test(d, yj, cfg, NptConfig{}, TestConfig{});
  CHECK(perm3.sigma2_hat == perm.sigma2_hat);
}

TEST_CASE("block variance is unchanged by a constant shift of the family") {
  const Dataset d = alt_data(120, 8);
  const FamilyPtr yj = make_family("yeo-johnson");
  const NptEstimate est = estimate_h(d, NptConfig{});
  const WeightFn w = WeightFn::from_sample(WeightSpec{}, d.ys());
  const TnResult tn = compute_Tn(d, est, *yj, w, TestConfig{});
  const double a = sigma2_hat(d, est, tn.gamma, 40, NptConfig{}, w, *yj);
  const ShiftedFamily shifted(yj, 2.5);
  GammaPoint g = tn.gamma;
  g.c2 += 2.5;
  const double b = sigma2_hat(d, est, g, 40, NptConfig{}, w, shifted);
  CHECK(b == doctest::Approx(a).epsilon(1e-10));
}

TEST_CASE("block estimator failure and config checks") {
  Dataset d = alt_data(100, 2);
  std::vector<std::size_t> order(d.n());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return d.y(i) < d.y(j); });
  d = d.permuted(order);  // the first block holds only y < 0
  const FamilyPtr yj = make_family("yeo-johnson");
  const NptEstimate est = estimate_h(d, NptConfig{});
  const WeightFn w = WeightFn::from_sample(WeightSpec{}, d.ys());
  const TnResult tn = compute_Tn(d, est, *yj, w, TestConfig{});
  try {
    (void)sigma2_hat(d, est, tn.gamma, 20, NptConfig{}, w, *yj);
    FAIL("expected BlockEstimatorFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BlockEstimatorFailure);
  }
  RelevantConfig cfg;
  cfg.m_n = 60;
  CHECK_THROWS_AS(cfg.validate(100), Error);
  cfg.m_n = 10;
  CHECK_THROWS_AS(cfg.validate(100), Error);
  cfg.m_n.reset();
  CHECK(cfg.block_size(1000) == 100);
}
