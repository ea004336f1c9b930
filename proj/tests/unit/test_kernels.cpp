#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "transpec/errors.hpp"
#include "transpec/kernels.hpp"
#include "transpec/quadrature.hpp"

using namespace transpec;

TEST_CASE("biweight pins") {
  const Kernel k = biweight_kernel();
  CHECK(k.eval(0.0) == 15.0 / 16.0);
  CHECK(k.eval(1.0) == 0.0);
  CHECK(k.eval(-1.0) == 0.0);
  CHECK(k.deriv(1.0) == 0.0);
  CHECK(k.deriv(-1.0) == 0.0);
  CHECK(k.integral(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(k.integral(-1.0) == 0.0);
  CHECK(k.integral(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(biweight_kernel(true).eval(0.0) == 0.75);
  CHECK(biweight_kernel(true).integral(1.0) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("kernels integrate to one and derivatives match") {
  for (KernelKind kind : {KernelKind::Biweight, KernelKind::Uniform, KernelKind::Gaussian, KernelKind::Cauchy}) {
    const Kernel k(kind);
    double total = 0.0;
    if (k.compact()) {
      total = integrate_adaptive([&](double t) { return k.eval(t); }, -1.0, 1.0, 1e-12, 1e-12);
    } else if (kind == KernelKind::Gaussian) {
      total = integrate_adaptive([&](double t) { return k.eval(t); }, -12.0, 12.0, 1e-12, 1e-12);
    } else {
      // t = tan(s) maps the line onto (−π/2, π/2)
      total = integrate_adaptive(
          [&](double s) { return k.eval(std::tan(s)) / (std::cos(s) * std::cos(s)); },
          -std::numbers::pi / 2 + 1e-9, std::numbers::pi / 2 - 1e-9, 1e-12, 1e-12);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
    for (double t : {-0.7, -0.2, 0.1, 0.55}) {
      const double fi = integrate_adaptive([&](double s) { return k.eval(s); }, -0.9, t, 1e-13, 1e-13);
      CHECK(k.integral(t) - k.integral(-0.9) == doctest::Approx(fi).epsilon(1e-10));
      if (kind != KernelKind::Uniform) {
        const double fd = (k.eval(t + 1e-6) - k.eval(t - 1e-6)) / 2e-6;
        CHECK(k.deriv(t) == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("scaled kernel") {
  const Kernel k = biweight_kernel();
  CHECK(scaled_kernel_eval(k, 1.0, 0.0) == 15.0 / 16.0);
  CHECK(scaled_kernel_eval(k, 2.0, 0.0) == 15.0 / 32.0);
  CHECK(scaled_kernel_eval(k, 0.3, 0.31) == 0.0);
  CHECK(scaled_kernel_eval(k, 0.3, -0.5) == 0.0);
  CHECK(scaled_kernel_integral(k, 0.3, 0.31) == 1.0);
}

TEST_CASE("normal reference bandwidth") {
  std::vector<double> v(100);
  // alternate ±a so the (n−1)-divisor sd is exactly 1
  const double a = std::sqrt(99.0 / 100.0);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % 2 == 0 ? a : -a);
  const double h1 = normal_reference_bandwidth(v);
  CHECK(h1 == doctest::Approx(std::pow(40.0 * std::sqrt(std::numbers::pi) / 100.0, 0.2)).epsilon(1e-12));
  for (auto& x : v) x *= 2.0;
  CHECK(normal_reference_bandwidth(v) == doctest::Approx(2.0 * h1).epsilon(1e-12));
  // same spread, more points: the n^(-1/5) rate
  double prev = 0.0;
  for (std::size_t n : {10, 100, 1000, 10000}) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = i % 2 == 0 ? 1.0 : -1.0;
    const double sd = std::sqrt(static_cast<double>(n) / static_cast<double>(n - 1));
    const double h = normal_reference_bandwidth(w) / sd;
    if (prev > 0.0) CHECK(h == doctest::Approx(prev * std::pow(10.0, -0.2)).epsilon(1e-12));
    prev = h;
  }
  try {
    (void)normal_reference_bandwidth(std::vector<double>(5, 1.0));
    FAIL("expected ZeroVariance");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroVariance);
  }
}

TEST_CASE("smoothing distributions") {
  const Kernel u = smoothing_distribution(SmoothingKind::Uniform);
  const Kernel g = smoothing_distribution(SmoothingKind::Gaussian);
  CHECK(u.eval(0.0) == 0.5);
  CHECK(g.integral(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.eval(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-15));
}

TEST_CASE("smoothed sign derivatives") {
  for (KernelKind kind : {KernelKind::Cauchy, KernelKind::Gaussian, KernelKind::Biweight}) {
    SmoothedSign s{Kernel(kind), 0.2};
    CHECK(s.sign(0.0) == doctest::Approx(0.0));
    for (double z : {-0.5, -0.05, 0.03, 0.4}) {
      const double fd1 = (s.abs(z + 1e-6) - s.abs(z - 1e-6)) / 2e-6;
      const double fd2 = (s.abs_d1(z + 1e-6) - s.abs_d1(z - 1e-6)) / 2e-6;
      CHECK(s.abs_d1(z) == doctest::Approx(fd1).epsilon(1e-6));
      CHECK(s.abs_d2(z) == doctest::Approx(fd2).epsilon(1e-5));
    }
  }
}
