#include "transpec/simulation.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "transpec/errors.hpp"
#include "transpec/parallel.hpp"

namespace transpec {

double r_eval(RId r, double y) noexcept {
  switch (r) {
    case RId::R1: return 5.0 * 0.5 * std::erfc(-y / std::numbers::sqrt2);
    case RId::R2: return std::exp(y);
    case RId::R3: return y * y * y;
  }
  return 0.0;
}

std::string r_name(RId r) {
  switch (r) {
    case RId::R1: return "r1";
    case RId::R2: return "r2";
    case RId::R3: return "r3";
  }
  return "?";
}

RId parse_r(const std::string& name) {
  if (name == "r1") return RId::R1;
  if (name == "r2") return RId::R2;
  if (name == "r3") return RId::R3;
  fail(ErrorKind::InvalidConfig, "unknown deviation function '" + name + "' (expected r1, r2 or r3)");
}

void SimScenario::validate() const {
  if (!(theta0 >= 0.0 && theta0 <= 2.0)) fail(ErrorKind::InvalidConfig, "scenario.theta0 must be in [0, 2]");
  if (n < 20) fail(ErrorKind::InvalidConfig, "scenario.n must be at least 20");
  if (alternative.kind == AltKind::Fixed && !(alternative.c >= 0.0 && alternative.c <= 1.0))
    fail(ErrorKind::InvalidConfig, "scenario c must be in [0, 1]");
  if (!(model.sigma > 0.0) || !(model.x_support.length() > 0.0))
    fail(ErrorKind::InvalidConfig, "scenario model needs sigma > 0 and a nonempty covariate support");
}

namespace {

FamilyPtr yj() {
  static const FamilyPtr family = std::make_shared<YeoJohnson>();
  return family;
}

}  // namespace

SimTransform::SimTransform(const SimScenario& scenario) : sc_(scenario), h0_(normalize(yj(), {scenario.theta0})) {
  sc_.validate();
  lam_inv0_ = yeo_johnson_inverse(sc_.theta0, 0.0);
  lam_inv1_ = yeo_johnson_inverse(sc_.theta0, 1.0);
  if (sc_.alternative.kind == AltKind::Fixed) {
    const double c = sc_.alternative.c;
    const RId r = sc_.alternative.r;
    den_ = (1.0 - c) * (lam_inv1_ - lam_inv0_) + c * (r_eval(r, 1.0) - r_eval(r, 0.0));
    if (!(den_ > 0.0)) fail(ErrorKind::NonMonotoneMixture, "alternative: anchor normalization is not positive");
  }
}

double SimTransform::r0(double y) const {
  if (sc_.alternative.kind != AltKind::Local) return 0.0;
  const RId r = sc_.alternative.r;
  const double r_0 = r_eval(r, 0.0), r_1 = r_eval(r, 1.0);
  return sc_.alternative.scale * (r_eval(r, y) - r_0 - h0_(y) * (r_1 - r_0)) / h0_.scale();
}

double SimTransform::eval(double y) const {
  switch (sc_.alternative.kind) {
    case AltKind::Null: return h0_(y);
    case AltKind::Local: return h0_(y) + r0(y) / std::sqrt(static_cast<double>(sc_.n));
    case AltKind::Fixed: break;
  }
  return invert_monotone([this](double s) { return inverse(s); }, y, {-1.0, 2.0});
}

double SimTransform::inverse(double s) const {
  const auto& alt = sc_.alternative;
  if (alt.kind == AltKind::Null || (alt.kind == AltKind::Local && alt.scale == 0.0)) return h0_.inverse(s);
  if (alt.kind == AltKind::Fixed) {
    const double c = alt.c;
    const double lam = yeo_johnson_inverse(sc_.theta0, s);
    return ((1.0 - c) * (lam - lam_inv0_) + c * (r_eval(alt.r, s) - r_eval(alt.r, 0.0))) / den_;
  }
  return invert_monotone([this](double y) { return eval(y); }, s, {-1.0, 2.0});
}

void check_monotone(const SimTransform& h) {
  constexpr int points = 1201;
  double prev = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < points; ++k) {
    const double s = -6.0 + 12.0 * k / (points - 1);
    // fixed mixtures are given through h⁻¹, whose range can be bounded (r1 at c = 1)
    const double v = h.scenario().alternative.kind == AltKind::Fixed ? h.inverse(s)
                                                                       : h.eval(h.null_transform().inverse(s));
    if (!(v > prev))
      fail(ErrorKind::NonMonotoneMixture, "transformation is not increasing near s = " + std::to_string(s));
    prev = v;
  }
}

Dataset generate(const SimScenario& scenario, Rng& rng) {
  const SimTransform h(scenario);
  if (scenario.alternative.kind == AltKind::Local && scenario.alternative.scale != 0.0) check_monotone(h);
  const auto& m = scenario.model;
  std::vector<double> x(scenario.n), y(scenario.n);
  for (std::size_t i = 0; i < scenario.n; ++i) {
    x[i] = rng.uniform(m.x_support.lo, m.x_support.hi);
    const double s = m.slope * x[i] + m.intercept + m.sigma * rng.normal();
    y[i] = h.inverse(s);
  }
  return Dataset::univariate(std::move(x), std::move(y));
}

namespace {

Dataset generate_checked(const SimScenario& scenario, AltKind expected, std::uint64_t seed) {
  if (scenario.alternative.kind != expected) fail(ErrorKind::InvalidConfig, "scenario has a different alternative kind");
  Rng rng(seed, {1});
  return generate(scenario, rng);
}

}  // namespace

Dataset gen_null(const SimScenario& scenario, std::uint64_t seed) {
  return generate_checked(scenario, AltKind::Null, seed);
}

Dataset gen_fixed_alternative(const SimScenario& scenario, std::uint64_t seed) {
  if (scenario.alternative.kind == AltKind::Fixed) check_monotone(SimTransform(scenario));
  return generate_checked(scenario, AltKind::Fixed, seed);
}

Dataset gen_local_alternative(const SimScenario& scenario, std::uint64_t seed) {
  return generate_checked(scenario, AltKind::Local, seed);
}

// ---------------------------------------------------------------- study

StudyResult rejection_study(const StudyConfig& config) {
  if (config.cells.empty()) fail(ErrorKind::InvalidConfig, "study: no cells");
  for (const auto& cell : config.cells) {
    if (cell.runs < 10) fail(ErrorKind::InvalidConfig, "study: runs must be at least 10 per cell");
    cell.scenario.validate();
    if (cell.scenario.alternative.kind == AltKind::Fixed) check_monotone(SimTransform(cell.scenario));
  }
  config.gof.bootstrap.validate();

  struct Task {
    std::size_t cell;
    std::size_t run;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < config.cells.size(); ++c)
    for (std::size_t r = 0; r < config.cells[c].runs; ++r) tasks.push_back({c, r});

  const std::size_t na = config.gof.alphas.size();
  struct Outcome {
    bool failed = false;
    std::vector<bool> reject;
    double seconds = 0.0;
  };
  std::vector<Outcome> out(tasks.size());
  const FamilyPtr family = yj();
  parallel_for(tasks.size(), config.workers, [&](std::size_t t) {
    const auto [c, r] = tasks[t];
    const StudyCell& cell = config.cells[c];
    const auto start = std::chrono::steady_clock::now();
    GofConfig cfg = config.gof;
    cfg.test.weight = cell.weight;
    cfg.workers = 1;
    cfg.bootstrap.seed = stream_key(config.seed, {2, c, r});
    try {
      Rng rng(config.seed, {1, c, r});
      const Dataset data = generate(cell.scenario, rng);
      const GofReport rep = gof_test(data, family, cfg);
      out[t].reject = rep.reject;
    } catch (const Error& e) {
      if (!e.is_input_error()) throw;
      out[t].failed = true;
    }
    out[t].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  StudyResult res;
  res.seed = config.seed;
  for (std::size_t c = 0; c < config.cells.size(); ++c) {
    CellResult cr;
    cr.label = config.cells[c].label;
    cr.scenario = config.cells[c].scenario;
    cr.weight = config.cells[c].weight;
    cr.runs = config.cells[c].runs;
    cr.alphas = config.gof.alphas;
    cr.rejections.assign(na, 0);
    res.cells.push_back(std::move(cr));
  }
  std::vector<double> seconds(config.cells.size(), 0.0);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    CellResult& cr = res.cells[tasks[t].cell];
    seconds[tasks[t].cell] += out[t].seconds;
    if (out[t].failed) {
      ++cr.failures;
      continue;
    }
    ++cr.used;
    for (std::size_t a = 0; a < na; ++a) cr.rejections[a] += out[t].reject[a] ? 1 : 0;
  }
  for (std::size_t c = 0; c < res.cells.size(); ++c) {
    CellResult& cr = res.cells[c];
    cr.valid = cr.used > 0 && static_cast<double>(cr.failures) <= config.max_failure_fraction * static_cast<double>(cr.runs);
    for (std::size_t a = 0; a < na; ++a) {
      const double p = cr.used > 0 ? static_cast<double>(cr.rejections[a]) / static_cast<double>(cr.used) : 0.0;
      cr.rates.push_back(p);
      cr.se.push_back(cr.used > 0 ? std::sqrt(p * (1.0 - p) / static_cast<double>(cr.used)) : 0.0);
    }
    if (config.timing) cr.mean_seconds = seconds[c] / static_cast<double>(cr.runs);
  }
  return res;
}

namespace {

std::string fmt_num(double v) {
  std::string s = std::to_string(v);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

StudyCell make_cell(double theta0, std::optional<std::pair<RId, double>> alt, std::size_t runs, std::size_t n,
                    WeightSpec weight, const std::string& suffix) {
  StudyCell cell;
  cell.scenario.theta0 = theta0;
  cell.scenario.n = n;
  cell.weight = weight;
  cell.runs = runs;
  if (alt) {
    cell.scenario.alternative = {AltKind::Fixed, alt->first, alt->second, 1.0};
    cell.label = "theta0=" + fmt_num(theta0) + "," + r_name(alt->first) + ",c=" + fmt_num(alt->second) + suffix;
  } else {
    cell.label = "theta0=" + fmt_num(theta0) + ",null" + suffix;
  }
  return cell;
}

}  // namespace

std::vector<StudyCell> table1_cells(std::size_t runs_null, std::size_t runs_alt, std::size_t n) {
  std::vector<StudyCell> cells;
  for (double th : {0.0, 0.5, 1.0, 2.0}) {
    cells.push_back(make_cell(th, std::nullopt, runs_null, n, {}, ""));
    for (RId r : {RId::R1, RId::R2, RId::R3})
      for (double c : {0.2, 0.4, 0.6, 0.8, 1.0}) cells.push_back(make_cell(th, std::pair{r, c}, runs_alt, n, {}, ""));
  }
  return cells;
}

std::vector<StudyCell> table4_cells(std::size_t runs_null, std::size_t runs_alt, std::size_t n) {
  std::vector<StudyCell> cells;
  WeightSpec trimmed;
  trimmed.kind = WeightKind::Trimmed;
  for (double th : {1.0, 2.0}) {
    for (const auto& [w, suffix] : {std::pair{WeightSpec{}, std::string(",flat")}, std::pair{trimmed, std::string(",trimmed")}}) {
      cells.push_back(make_cell(th, std::nullopt, runs_null, n, w, suffix));
      for (double c : {0.2, 0.4, 0.6, 0.8, 1.0})
        cells.push_back(make_cell(th, std::pair{RId::R1, c}, runs_alt, n, w, suffix));
    }
  }
  return cells;
}

// ---------------------------------------------------------------- curves

CurveTable curve_grid(const CurveConfig& config, const NptConfig& npt, const TestConfig& test) {
  if (config.n_points < 2) fail(ErrorKind::InvalidConfig, "curves: n_points must be at least 2");
  SimScenario sc;
  sc.theta0 = config.theta0;
  sc.n = config.n;
  sc.alternative = {AltKind::Fixed, config.r, config.c, 1.0};
  const SimTransform h(sc);
  check_monotone(h);
  const Interval yr = config.y_range ? *config.y_range : Interval{h.inverse(-1.0), h.inverse(3.0)};
  if (!(yr.length() > 0.0)) fail(ErrorKind::InvalidConfig, "curves: empty y range");

  Rng rng(config.seed, {3});
  const Dataset data = generate(sc, rng);
  const NptEstimate est = estimate_h(data, npt);
  const WeightFn w = WeightFn::from_sample(test.weight, data.ys());
  const TnResult tn = compute_Tn(data, est, *yj(), w, test);
  if (!(tn.gamma.c1 > 0.0)) fail(ErrorKind::SingularDesign, "curves: fitted c1 is zero");

  const double li0 = yeo_johnson_inverse(config.theta0, 0.0);
  const double li1 = yeo_johnson_inverse(config.theta0, 1.0);
  CurveTable table;
  table.gamma_hat = tn.gamma;
  for (std::size_t k = 0; k < config.n_points; ++k) {
    const double y = yr.lo + yr.length() * static_cast<double>(k) / static_cast<double>(config.n_points - 1);
    CurveRow row;
    row.y = y;
    row.h = h.eval(y);
    row.fit = (yeo_johnson_eval(tn.gamma.theta[0], y) - tn.gamma.c2) / tn.gamma.c1;
    row.null_part = yeo_johnson_eval(config.theta0, y * (li1 - li0) + li0);
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace transpec
