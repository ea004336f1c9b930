#include <cmath>
#include <vector>

#include "doctest.h"
#include "transpec/errors.hpp"
#include "transpec/rng.hpp"
#include "transpec/simulation.hpp"
#include "transpec/test_statistic.hpp"

using namespace transpec;

namespace {

class AffineFamily final : public ParametricFamily {
 public:
  AffineFamily(FamilyPtr base, double a, double b) : base_(std::move(base)), a_(a), b_(b) {}
  std::string name() const override { return "affine"; }
  std::size_t theta_dim() const override { return base_->theta_dim(); }
  std::vector<Interval> theta_box() const override { return base_->theta_box(); }
  double eval(std::span<const double> t, double y) const override { return a_ * base_->eval(t, y) + b_; }
  void grad_theta(std::span<const double> t, double y, std::span<double> out) const override {
    base_->grad_theta(t, y, out);
    for (double& v : out) v *= a_;
  }
  void hess_theta(std::span<const double> t, double y, std::span<double> out) const override {
    base_->hess_theta(t, y, out);
    for (double& v : out) v *= a_;
  }

 private:
  FamilyPtr base_;
  double a_, b_;
};

}  // namespace

TEST_CASE("profile_c two-point normal equations") {
  const std::vector<double> h{0.0, 1.0}, lam{0.0, 2.0}, w{1.0, 1.0};
  const ProfileFit f = profile_c(h, lam, w);
  CHECK(f.c1 == 2.0);
  CHECK(f.c2 == 0.0);
  CHECK(f.objective == 0.0);
  const std::vector<double> h2{0.2, 0.9}, l2{-0.4, 1.7};
  const ProfileFit g = profile_c(h2, l2, w);
  CHECK(g.c1 == doctest::Approx(2.1 / 0.7).epsilon(1e-14));
  CHECK(g.c2 == doctest::Approx(-0.4 - 0.2 * 3.0).epsilon(1e-14));
  CHECK(g.objective == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("profile_c exact fit and shift") {
  const FamilyPtr yj = make_family("yeo-johnson");
  const Theta th{0.6};
  const NormalizedTransform h = normalize(yj, th);
  std::vector<double> y, hv, lam, w;
  for (int i = -20; i <= 20; ++i) {
    y.push_back(0.15 * i);
    hv.push_back(h(0.15 * i));
    lam.push_back(yj->eval(th, 0.15 * i));
    w.push_back(1.0);
  }
  const ProfileFit f = profile_c(hv, lam, w);
  CHECK(f.c1 == doctest::Approx(h.scale()).epsilon(1e-12));
  CHECK(f.c2 == doctest::Approx(yj->eval(th, 0.0)).epsilon(1e-12));
  CHECK(f.objective <= 1e-20);

  Rng rng(3, {0});
  for (auto& v : hv) v += 0.1 * rng.normal();
  const ProfileFit a = profile_c(hv, lam, w);
  for (auto& v : lam) v += 3.25;
  const ProfileFit b = profile_c(hv, lam, w);
  CHECK(b.c1 == doctest::Approx(a.c1).epsilon(1e-12));
  CHECK(b.c2 == doctest::Approx(a.c2 + 3.25).epsilon(1e-12));
  CHECK(b.objective == doctest::Approx(a.objective).epsilon(1e-10));
}

TEST_CASE("profile_c optimality and boxes") {
  Rng rng(17, {0});
  const FamilyPtr yj = make_family("yeo-johnson");
  std::vector<double> y(60), hv(60), w(60, 1.0), lam(60);
  for (std::size_t j = 0; j < y.size(); ++j) {
    y[j] = 1.5 * rng.normal() + 0.5;
    hv[j] = y[j] + 0.2 * rng.normal();
  }
  for (int t = 0; t < 100; ++t) {
    const Theta th{rng.uniform(0.0, 2.0)};
    for (std::size_t j = 0; j < y.size(); ++j) lam[j] = yj->eval(th, y[j]);
    const ProfileFit f = profile_c(hv, lam, w);
    for (int p = 0; p < 50; ++p) {
      const double c1 = f.c1 + rng.uniform(-0.5, 0.5), c2 = f.c2 + rng.uniform(-0.5, 0.5);
      double obj = 0.0;
      for (std::size_t j = 0; j < y.size(); ++j) obj += std::pow(hv[j] * c1 + c2 - lam[j], 2);
      CHECK(f.objective <= obj);
    }
  }
  // box-constrained solution equals a brute-force scan over the box
  for (std::size_t j = 0; j < y.size(); ++j) lam[j] = yj->eval(Theta{1.4}, y[j]);
  CBoxes boxes{Interval{0.2, 0.8}, Interval{-0.1, 0.1}};
  const ProfileFit c = profile_c(hv, lam, w, boxes);
  double best = 1e300;
  for (int i = 0; i <= 300; ++i)
    for (int k = 0; k <= 300; ++k) {
      const double c1 = 0.2 + 0.6 * i / 300.0, c2 = -0.1 + 0.2 * k / 300.0;
      double obj = 0.0;
      for (std::size_t j = 0; j < y.size(); ++j) obj += std::pow(hv[j] * c1 + c2 - lam[j], 2);
      best = std::min(best, obj);
    }
  CHECK(c.objective <= best + 1e-9);
  CHECK(boxes.c1->contains(c.c1));
  CHECK(boxes.c2->contains(c.c2));
}

TEST_CASE("profile_c singular design") {
  const std::vector<double> h{0.5, 0.5, 0.5}, lam{0.0, 1.0, 2.0}, w{1.0, 1.0, 1.0};
  try {
    (void)profile_c(h, lam, w);
    FAIL("expected SingularDesign");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularDesign);
  }
}

TEST_CASE("minimize_distance recovers an exact family member") {
  const FamilyPtr yj = make_family("yeo-johnson");
  for (double ts : {0.0, 0.55, 1.0, 1.37, 2.0}) {
    const NormalizedTransform h = normalize(yj, {ts});
    std::vector<double> y, hv, w;
    for (int i = 0; i <= 80; ++i) {
      y.push_back(-2.0 + 0.06 * i);
      hv.push_back(h(y.back()));
      w.push_back(1.0);
    }
    const TnResult r = minimize_distance(y, hv, w, *yj, TestConfig{});
    CHECK(r.t_n <= 1e-12);
    CHECK(r.gamma.theta[0] == doctest::Approx(ts).epsilon(1e-6));
  }
}

TEST_CASE("affine equivariance of T_n") {
  const FamilyPtr yj = make_family("yeo-johnson");
  SimScenario sc;
  sc.theta0 = 0.5;
  sc.alternative = {AltKind::Fixed, RId::R3, 0.4, 1.0};
  const Dataset d = gen_fixed_alternative(sc, 12);
  const NptEstimate est = estimate_h(d, NptConfig{});
  const WeightFn w = WeightFn::from_sample(WeightSpec{}, d.ys());
  const TnResult a = compute_Tn(d, est, *yj, w, TestConfig{});
  for (double scale : {2.0, 0.37, 5.0}) {
    const AffineFamily fam(yj, scale, -1.3);
    const TnResult b = compute_Tn(d, est, fam, w, TestConfig{});
    CHECK(std::abs(b.t_n - scale * scale * a.t_n) <= 1e-10 * scale * scale * a.t_n);
    CHECK(b.gamma.theta[0] == doctest::Approx(a.gamma.theta[0]).epsilon(1e-8));
  }
  CHECK(a.t_n > 0.0);
}

TEST_CASE("empirical_M and weights") {
  const FamilyPtr yj = make_family("yeo-johnson");
  const Dataset d = gen_null(SimScenario{}, 2);
  const NptEstimate est = estimate_h(d, NptConfig{});
  const std::vector<double> hv = est.eval(d.ys());
  const WeightFn w = WeightFn::from_sample(WeightSpec{}, d.ys());
  const TnResult r = compute_Tn(d, est, *yj, w, TestConfig{});
  CHECK(empirical_M(r.gamma, d, hv, w, *yj) == doctest::Approx(r.t_n / static_cast<double>(d.n())).epsilon(1e-12));
  // doubling w doubles the objective
  std::vector<double> w1 = w.values(d.ys()), w2 = w1;
  for (double& v : w2) v *= 2.0;
  const TnResult r1 = minimize_distance(d.ys(), hv, w1, *yj, TestConfig{});
  const TnResult r2 = minimize_distance(d.ys(), hv, w2, *yj, TestConfig{});
  CHECK(r2.t_n == doctest::Approx(2.0 * r1.t_n).epsilon(1e-10));
  // exact residuals give zero
  const GammaPoint g{1.0, 0.0, {1.0}};
  CHECK(empirical_M(g, d, d.ys(), w, *yj) == 0.0);
}

TEST_CASE("refined optimum never exceeds the grid optimum") {
  const FamilyPtr yj = make_family("yeo-johnson");
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SimScenario sc;
    sc.theta0 = 1.0;
    sc.alternative = {AltKind::Fixed, RId::R1, 0.6, 1.0};
    const Dataset d = gen_fixed_alternative(sc, seed);
    const NptEstimate est = estimate_h(d, NptConfig{});
    const std::vector<double> hv = est.eval(d.ys());
    const std::vector<double> w(d.n(), 1.0);
    double grid_best = 1e300;
    std::vector<double> lam(d.n());
    for (int k = 0; k < 41; ++k) {
      for (std::size_t j = 0; j < d.n(); ++j) lam[j] = yj->eval(Theta{k / 20.0}, d.y(j));
      grid_best = std::min(grid_best, profile_c(hv, lam, w).objective);
    }
    const TnResult r = minimize_distance(d.ys(), hv, w, *yj, TestConfig{});
    CHECK(r.t_n <= grid_best);
    CHECK(r.t_n >= 0.0);
  }
}

TEST_CASE("trimmed weight support") {
  std::vector<double> y(100);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(99 - i);
  const WeightFn flat = WeightFn::from_sample(WeightSpec{}, y);
  CHECK(flat.support() == Interval{0.0, 99.0});
  const WeightFn trim = WeightFn::from_sample(WeightSpec{WeightKind::Trimmed, 0.05, 0.05}, y);
  CHECK(trim.support() == Interval{5.0, 94.0});
  CHECK(trim(4.0) == 0.0);
  CHECK(trim(5.0) == 1.0);
}
