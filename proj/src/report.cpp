#include "transpec/report.hpp"

#include <charconv>
#include <sstream>

namespace transpec {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json to_json(const GammaPoint& g) { return {{"c1", g.c1}, {"c2", g.c2}, {"theta", g.theta}}; }

Json to_json(const BandwidthSet& b) {
  return {{"h_u", b.h_u}, {"h_x", b.h_x}, {"b", b.b}, {"a_n", b.a_n}, {"b_n", b.b_n}};
}

Json to_json(const GofReport& r) {
  Json levels = Json::array();
  for (std::size_t k = 0; k < r.alphas.size(); ++k)
    levels.push_back({{"alpha", r.alphas[k]}, {"quantile", r.quantiles[k]}, {"reject", static_cast<bool>(r.reject[k])}});
  const auto& d = r.diagnostics;
  return {
      {"t_n", r.t_n},
      {"gamma_hat", to_json(r.gamma_hat)},
      {"levels", levels},
      {"p_star", r.p_star},
      {"b_used", r.b_used},
      {"m_used", r.m_used},
      {"statistics", r.statistics},
      {"bandwidths", to_json(r.bandwidths)},
      {"diagnostics",
       {{"failed", d.failed},
        {"anchor_drops", d.anchor_drops},
        {"extended", d.extended},
        {"stalls", d.stalls},
        {"stalled", d.stalled},
        {"isotonic_adjustments", d.isotonic_adjustments},
        {"excluded_pairs", d.excluded_pairs},
        {"g_bandwidth", d.g_bandwidth}}},
  };
}

Json to_json(const RelevantReport& r) {
  return {
      {"statistic", r.statistic}, {"sigma2_hat", r.sigma2_hat}, {"reject", r.reject},
      {"m_hat", r.m_hat},         {"t_n", r.t_n},               {"critical", r.critical},
      {"m_n", r.m_n},             {"q_blocks", r.q_blocks},     {"gamma_hat", to_json(r.gamma_hat)},
  };
}

namespace {

std::string alt_name(AltKind k) {
  switch (k) {
    case AltKind::Null: return "null";
    case AltKind::Fixed: return "fixed";
    case AltKind::Local: return "local";
  }
  return "null";
}

std::string weight_name(const WeightSpec& w) { return w.kind == WeightKind::Flat ? "flat" : "trimmed"; }

}  // namespace

Json to_json(const StudyResult& r) {
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    const auto& a = c.scenario.alternative;
    Json alt = {{"kind", alt_name(a.kind)}};
    if (a.kind != AltKind::Null) {
      alt["r"] = r_name(a.r);
      if (a.kind == AltKind::Fixed) alt["c"] = a.c;
      else alt["scale"] = a.scale;
    }
    Json levels = Json::array();
    for (std::size_t k = 0; k < c.alphas.size(); ++k)
      levels.push_back(
          {{"alpha", c.alphas[k]}, {"rejections", c.rejections[k]}, {"rate", c.rates[k]}, {"se", c.se[k]}});
    Json cell = {
        {"label", c.label},
        {"theta0", c.scenario.theta0},
        {"n", c.scenario.n},
        {"alternative", alt},
        {"weight", weight_name(c.weight)},
        {"runs", c.runs},
        {"used", c.used},
        {"failures", c.failures},
        {"valid", c.valid},
        {"levels", levels},
    };
    if (c.mean_seconds) cell["mean_seconds"] = *c.mean_seconds;
    cells.push_back(cell);
  }
  return {{"seed", r.seed}, {"cells", cells}};
}

Json to_json(const NystromResult& r) {
  Json j = {
      {"quantile", r.quantile},
      {"trace", r.trace},
      {"b", r.b_const},
      {"trace_relative_error", r.b_const != 0.0 ? (r.trace - r.b_const) / r.b_const : 0.0},
      {"min_eigenvalue", r.min_eigenvalue},
      {"n_nodes", r.n_nodes},
      {"eigenvalues", r.eigenvalues},
  };
  if (r.shift) j["shift"] = {{"c", r.shift->c}, {"var_w0", r.shift->var_w0}, {"cov", r.shift->cov}};
  return j;
}

Json to_json(const CurveTable& t) {
  Json y = Json::array(), h = Json::array(), fit = Json::array(), np = Json::array();
  for (const auto& row : t.rows) {
    y.push_back(row.y);
    h.push_back(row.h);
    fit.push_back(row.fit);
    np.push_back(row.null_part);
  }
  return {{"gamma_hat", to_json(t.gamma_hat)}, {"y", y}, {"h", h}, {"fit", fit}, {"null_part", np}};
}

Json npt_grid_json(const NptEstimate& est, std::size_t y_points) {
  const Interval w = est.y_window();
  Json ys = Json::array(), hs = Json::array();
  for (std::size_t i = 0; i < y_points; ++i) {
    const double y = y_points == 1 ? w.lo : w.lo + w.length() * static_cast<double>(i) / static_cast<double>(y_points - 1);
    ys.push_back(y);
    hs.push_back(est.eval(y));
  }
  return {
      {"u", est.u_grid()},
      {"q_raw", est.q_raw()},
      {"q", est.q_values()},
      {"y_window", {w.lo, w.hi}},
      {"y", ys},
      {"h", hs},
      {"bandwidths", to_json(est.bandwidths())},
      {"isotonic_adjustments", est.isotonic_adjustments()},
      {"excluded_pairs", est.excluded_pairs()},
  };
}

std::string study_csv(const StudyResult& r) {
  std::ostringstream os;
  os << "label,theta0,alternative,r,c,weight,n,runs,used,failures,valid";
  const std::vector<double> alphas = r.cells.empty() ? std::vector<double>{} : r.cells.front().alphas;
  for (double a : alphas) os << ",rate_" << format_double(a) << ",se_" << format_double(a);
  os << '\n';
  for (const auto& c : r.cells) {
    const auto& a = c.scenario.alternative;
    os << '"' << c.label << '"' << ',' << format_double(c.scenario.theta0) << ',' << alt_name(a.kind) << ','
       << (a.kind == AltKind::Null ? "" : r_name(a.r)) << ','
       << (a.kind == AltKind::Fixed ? format_double(a.c) : a.kind == AltKind::Local ? format_double(a.scale) : "")
       << ',' << weight_name(c.weight) << ',' << c.scenario.n << ',' << c.runs << ',' << c.used << ','
       << c.failures << ',' << (c.valid ? "true" : "false");
    for (std::size_t k = 0; k < c.rates.size(); ++k)
      os << ',' << format_double(c.rates[k]) << ',' << format_double(c.se[k]);
    os << '\n';
  }
  return os.str();
}

std::string curves_csv(const CurveTable& t) {
  std::ostringstream os;
  os << "y,h,fit,null_part\n";
  for (const auto& row : t.rows)
    os << format_double(row.y) << ',' << format_double(row.h) << ',' << format_double(row.fit) << ','
       << format_double(row.null_part) << '\n';
  return os.str();
}

std::string npt_grid_csv(const NptEstimate& est) {
  std::ostringstream os;
  os << "u,q_raw,q\n";
  for (std::size_t i = 0; i < est.u_grid().size(); ++i)
    os << format_double(est.u_grid()[i]) << ',' << format_double(est.q_raw()[i]) << ','
       << format_double(est.q_values()[i]) << '\n';
  return os.str();
}

}  // namespace transpec
