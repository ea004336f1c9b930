#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "transpec/npt_estimator.hpp"
#include "transpec/rng.hpp"
#include "transpec/transform_family.hpp"

namespace transpec {

/// (1 − N(t)) / φ(t).
[[nodiscard]] double mills_ratio(double t) noexcept;

/// Closed-form model S = h(Y) = αX + β + ε with X ~ U(a, b), ε ~ N(0, σ²).
struct OracleModel {
  Interval x_support{0.0, 1.0};
  double slope = 4.0;
  double intercept = -1.0;
  double sigma = 1.0;
};

/// One observation of the oracle law. u = 𝒯_S(s) and y = h⁻¹(s).
struct OraclePoint {
  double x = 0.0;
  double s = 0.0;
  double u = 0.0;
  double y = 0.0;
};

class ModelOracle {
 public:
  /// Throws InvalidConfig when the v support leaves the covariate support.
  ModelOracle(OracleModel model, NormalizedTransform h, VWeight v);

  [[nodiscard]] const OracleModel& model() const noexcept { return model_; }
  [[nodiscard]] const NormalizedTransform& h() const noexcept { return h_; }
  [[nodiscard]] const VWeight& v() const noexcept { return v_; }

  [[nodiscard]] double g(double x) const noexcept { return model_.slope * x + model_.intercept; }
  [[nodiscard]] double f_x(double x) const noexcept;
  [[nodiscard]] double f_x_d1(double) const noexcept { return 0.0; }
  [[nodiscard]] double v_density(double x) const noexcept;
  [[nodiscard]] double v_density_d1(double x) const noexcept;

  [[nodiscard]] double cdf_s(double s) const noexcept;
  [[nodiscard]] double density_s(double s) const noexcept;
  /// F_U(1) − F_U(0) = F_S(1) − F_S(0).
  [[nodiscard]] double d_u() const noexcept { return d_u_; }
  /// 𝒯_S(s).
  [[nodiscard]] double t_s(double s) const noexcept { return (cdf_s(s) - f_s0_) / d_u_; }
  /// Q = 𝒯_S⁻¹.
  [[nodiscard]] double q(double u) const;
  [[nodiscard]] double q_prime_at_s(double s) const noexcept { return d_u_ / density_s(s); }
  [[nodiscard]] double q_prime(double u) const { return q_prime_at_s(q(u)); }
  [[nodiscard]] double cdf_u(double u) const { return cdf_s(q(u)); }

  /// Φ(u, x) = P(U ≤ u | X = x) and its partial derivatives, parameterized by s = Q(u).
  [[nodiscard]] double phi_s(double s, double x) const noexcept;
  [[nodiscard]] double phi_u_s(double s, double x) const noexcept;
  [[nodiscard]] double phi_1_s(double s, double x) const noexcept;
  [[nodiscard]] double joint_density(double u, double x) const;
  /// s₁(u, x) = −Q(u)/α.
  [[nodiscard]] double s1_s(double s) const noexcept { return -s / model_.slope; }

  [[nodiscard]] OraclePoint point_from_s(double s, double x) const;
  [[nodiscard]] OraclePoint point_from_u(double u, double x) const;
  [[nodiscard]] OraclePoint draw(Rng& rng) const;
  /// (Y, X) sample of size n.
  [[nodiscard]] std::vector<OraclePoint> sample(std::size_t n, Rng& rng) const;
  /// 𝒯_S(h(𝒴_w)) widened by `pad` on each side.
  [[nodiscard]] Interval u0_range(Interval y_window, double pad = 0.02) const;

 private:
  OracleModel model_;
  NormalizedTransform h_;
  VWeight v_;
  double f_s0_ = 0.0;
  double d_u_ = 1.0;
};

/// The five D functions at (u, x).
struct DTerms {
  double p0 = 0.0;
  double pu = 0.0;
  double p1 = 0.0;
  double f0 = 0.0;
  double f1 = 0.0;
};

/// Throws SingularPhi1 if |Φ₁(u, x)| < 1e-10.
[[nodiscard]] DTerms d_terms(const ModelOracle& oracle, double u, double x);

enum class VTilde {
  V1,  ///< v(x) / s₁(u₀, x)
  V2,  ///< v(x) s₁(u₀, x) / s₁(1, x)²
};

/// Influence of z on ∫ ṽ(u₀, x)(ŝ₁ − s₁)(u, x) dx, computed from its three
/// parts (direct, conditional-CDF, and rescaling) by one-dimensional quadrature.
[[nodiscard]] double delta_v(const ModelOracle& oracle, VTilde v_tilde, double u0, double u,
                             const OraclePoint& z);

/// ψ(z, u) assembled from delta_v and the Q′ terms.
[[nodiscard]] double psi(const ModelOracle& oracle, const OraclePoint& z, double u);

/// ψ(z, 𝒯_S(s)) for every s in the ascending grid, from the closed form of
/// the linear-Gaussian model.
[[nodiscard]] std::vector<double> psi_on_grid(const ModelOracle& oracle, const OraclePoint& z,
                                              std::span<const double> s_grid);
[[nodiscard]] double psi_closed(const ModelOracle& oracle, const OraclePoint& z, double u);

struct LimitLawConfig {
  std::optional<Interval> y_window;  ///< weight support; empty: S quantiles below
  double s_tail = 0.005;             ///< window [F_S⁻¹(tail), F_S⁻¹(1 − tail)]
  std::size_t s_panels = 120;
  std::size_t s_points = 3;
  std::size_t z_x_panels = 4;
  std::size_t z_x_points = 6;
  std::size_t z_s_points = 2;
  double z_s_tail = 8.0;             ///< in units of σ
  double gamma_floor = 1e-10;        ///< relative eigenvalue floor on Γ₀
};

/// Γ₀, φ, ζ, r̄, ζ̃, b and c by quadrature over S on the weighted window.
class LimitLawObjects {
 public:
  LimitLawObjects(ModelOracle oracle, LimitLawConfig config = {},
                  std::function<double(double)> r0 = {});

  [[nodiscard]] const ModelOracle& oracle() const noexcept { return oracle_; }
  [[nodiscard]] Interval s_window() const noexcept { return s_window_; }
  [[nodiscard]] const std::vector<double>& s_nodes() const noexcept { return s_nodes_; }
  /// Quadrature weight × f_S × w at each node.
  [[nodiscard]] const std::vector<double>& s_mass() const noexcept { return s_mass_; }
  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(gamma0_.rows()); }

  [[nodiscard]] Eigen::VectorXd R(double s) const;
  [[nodiscard]] const Eigen::MatrixXd& gamma0() const noexcept { return gamma0_; }
  [[nodiscard]] Eigen::VectorXd psi_row(const OraclePoint& z) const;
  [[nodiscard]] Eigen::VectorXd phi(const OraclePoint& z) const;
  /// ψ(z, U_q) − φ(z)ᵀΓ₀⁻¹R(s_q) at each node.
  [[nodiscard]] Eigen::VectorXd e_row(const OraclePoint& z) const;
  [[nodiscard]] double zeta(const OraclePoint& z1, const OraclePoint& z2) const;
  /// E[ζ(Z, Z)] by quadrature over the Z law.
  [[nodiscard]] double b_const() const noexcept { return b_; }

  [[nodiscard]] bool has_alternative() const noexcept { return static_cast<bool>(r0_); }
  [[nodiscard]] double rbar(double s) const;
  [[nodiscard]] double zeta_tilde(const OraclePoint& z) const;
  /// E[w r̄²].
  [[nodiscard]] double c_const() const noexcept { return c_; }
  /// Λ_θ₀(1) − Λ_θ₀(0).
  [[nodiscard]] double c10() const noexcept { return oracle_.h().scale(); }

 private:
  void compute_b(const LimitLawConfig& config);

  ModelOracle oracle_;
  Interval s_window_;
  std::vector<double> s_nodes_;
  std::vector<double> s_mass_;
  Eigen::MatrixXd r_nodes_;  ///< dim × M
  Eigen::MatrixXd gamma0_;
  Eigen::LDLT<Eigen::MatrixXd> gamma0_ldlt_;
  Eigen::MatrixXd proj_;     ///< Γ₀⁻¹ R_q in columns
  double b_ = 0.0;
  std::function<double(double)> r0_;
  Eigen::VectorXd rbar_coef_;
  Eigen::VectorXd rbar_nodes_;
  double c_ = 0.0;
};

struct LocalShift {
  double c = 0.0;
  double var_w0 = 0.0;
  std::vector<double> cov;  ///< Cov(W₀, W_k) for the retained eigenvalues
};

/// Empirical (1 − α)-quantile of c10²(Σ λ_k W_k² [+ W₀ + c]) over n_sim draws.
[[nodiscard]] double simulate_limit_quantile(std::span<const double> eigenvalues, double c10,
                                             double alpha, std::size_t n_sim, std::uint64_t seed,
                                             const std::optional<LocalShift>& shift = std::nullopt,
                                             std::size_t workers = 1);

struct NystromResult {
  double quantile = 0.0;
  std::vector<double> eigenvalues;  ///< descending, negatives clipped to zero
  double trace = 0.0;               ///< Σ λ̂_k before clipping
  double min_eigenvalue = 0.0;      ///< of the Gram matrix
  double b_const = 0.0;
  std::size_t n_nodes = 0;
  std::optional<LocalShift> shift;
};

/// Throws NonPositiveDefinite when the Gram matrix has an eigenvalue below
/// −1e-6 · trace.
[[nodiscard]] NystromResult nystrom_limit_quantile(const LimitLawObjects& objects, std::size_t n_nodes,
                                                   std::size_t n_sim, double alpha, std::uint64_t seed,
                                                   std::size_t workers = 1);

}  // namespace transpec
