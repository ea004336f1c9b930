#include "transpec/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "transpec/errors.hpp"
#include "transpec/report.hpp"

namespace transpec {

// ---------------------------------------------------------------- CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

Dataset parse_dataset_csv(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    while (pos < text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (!trim(line).empty()) return true;
    }
    return false;
  };

  std::string_view header;
  if (!next_line(header)) fail(ErrorKind::MissingColumn, "empty file: a header with y and x1 is required");
  const auto names = split_fields(header);
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < names.size(); ++c) {
    const std::string name(unquote(names[c]));
    if (name.empty()) continue;
    if (!index.emplace(name, c).second) throw ParseError(line_no, c + 1, "duplicate column '" + name + "'");
  }
  if (!index.count("y")) fail(ErrorKind::MissingColumn, "missing column 'y'");
  std::vector<std::size_t> xcols;
  while (index.count("x" + std::to_string(xcols.size() + 1))) xcols.push_back(index["x" + std::to_string(xcols.size() + 1)]);
  if (xcols.empty()) fail(ErrorKind::MissingColumn, "missing column 'x1'");
  for (const auto& [name, c] : index) {
    if (name.size() > 1 && name[0] == 'x' && std::all_of(name.begin() + 1, name.end(), ::isdigit) &&
        std::stoul(name.substr(1)) > xcols.size())
      fail(ErrorKind::MissingColumn, "column '" + name + "' present but x" + std::to_string(xcols.size() + 1) +
                                         " missing");
  }
  const std::size_t ycol = index["y"];
  const std::size_t d = xcols.size();

  std::vector<double> ys, xs;
  std::string_view line;
  while (next_line(line)) {
    const auto fields = split_fields(line);
    if (fields.size() != names.size())
      throw ParseError(line_no, std::min(fields.size(), names.size()) + 1,
                       "expected " + std::to_string(names.size()) + " fields, found " + std::to_string(fields.size()));
    auto value = [&](std::size_t c) {
      const std::string_view f = unquote(fields[c]);
      double v = 0.0;
      const char* first = f.data();
      if (!f.empty() && *first == '+') ++first;
      const auto res = std::from_chars(first, f.data() + f.size(), v);
      if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw ParseError(line_no, c + 1, "not a number: '" + std::string(f) + "'");
      if (!std::isfinite(v)) throw ParseError(line_no, c + 1, "non-finite value '" + std::string(f) + "'");
      return v;
    };
    ys.push_back(value(ycol));
    for (std::size_t k = 0; k < d; ++k) xs.push_back(value(xcols[k]));
  }
  if (ys.empty()) fail(ErrorKind::MissingColumn, "no data rows");
  return Dataset(std::move(ys), std::move(xs), d);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::InvalidConfig, "cannot open data file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset_csv(ss.str());
}

std::string dataset_csv(const Dataset& data) {
  std::ostringstream os;
  os << 'y';
  for (std::size_t k = 0; k < data.dx(); ++k) os << ",x" << k + 1;
  os << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    os << format_double(data.y(i));
    for (std::size_t k = 0; k < data.dx(); ++k) os << ',' << format_double(data.x(i, k));
    os << '\n';
  }
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::InvalidConfig, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorKind::InvalidConfig, "write failed: " + path);
}

// ---------------------------------------------------------------- dispatch

namespace {

GofConfig gof_config(const RunConfig& c) {
  GofConfig g;
  g.npt = c.npt;
  g.test = c.test;
  g.bootstrap = c.bootstrap;
  g.bootstrap.seed = c.seed_or_zero();
  g.alphas = c.alphas;
  g.workers = c.workers;
  return g;
}

Json run_fit(const RunConfig& c, std::string& csv) {
  const Dataset data = read_dataset(c.data);
  const NptEstimate est = estimate_h(data, c.npt);
  const FamilyPtr family = make_family(c.family);
  const WeightFn w = WeightFn::from_sample(c.test.weight, data.ys());
  const TnResult tn = compute_Tn(data, est, *family, w, c.test);
  csv = npt_grid_csv(est);
  return {{"n", data.n()},
          {"dx", data.dx()},
          {"estimate", npt_grid_json(est)},
          {"t_n", tn.t_n},
          {"gamma_hat", to_json(tn.gamma)},
          {"stalled", tn.stalled}};
}

Json run_test(const RunConfig& c) {
  const Dataset data = read_dataset(c.data);
  Json j = to_json(gof_test(data, make_family(c.family), gof_config(c)));
  j["n"] = data.n();
  return j;
}

Json run_relevant(const RunConfig& c) {
  const Dataset data = read_dataset(c.data);
  RelevantConfig rc = c.relevant;
  rc.seed = c.seed_or_zero();
  rc.workers = c.workers;
  Json j = to_json(relevant_test(data, make_family(c.family), rc, c.npt, c.test));
  j["n"] = data.n();
  j["eta"] = rc.eta;
  j["alpha"] = rc.alpha;
  return j;
}

Json run_simulate(const RunConfig& c, std::string& csv) {
  const auto& s = c.simulate;
  const std::size_t runs_alt = s.runs_alt.value_or(s.runs);
  std::vector<StudyCell> cells = s.table == 1 ? table1_cells(s.runs, runs_alt, s.n) : table4_cells(s.runs, runs_alt, s.n);
  if (!s.cells.empty()) {
    std::vector<StudyCell> kept;
    for (const auto& label : s.cells) {
      auto it = std::find_if(cells.begin(), cells.end(), [&](const StudyCell& x) { return x.label == label; });
      if (it == cells.end()) fail(ErrorKind::InvalidConfig, "simulate.cells: no cell labelled '" + label + "'");
      kept.push_back(*it);
    }
    cells = std::move(kept);
  }
  StudyConfig sc;
  sc.cells = std::move(cells);
  sc.gof = gof_config(c);
  sc.gof.workers = 1;
  sc.seed = c.seed_or_zero();
  sc.workers = c.workers;
  sc.max_failure_fraction = s.max_failure_fraction;
  sc.timing = c.timing;
  const StudyResult r = rejection_study(sc);
  csv = study_csv(r);
  Json j = to_json(r);
  j["table"] = s.table;
  return j;
}

Json run_limit_law(const RunConfig& c) {
  const auto& L = c.limit_law;
  VWeight v;
  v.kind = c.npt.v_kind;
  v.support = L.v_support;
  const OracleModel model;
  ModelOracle oracle(model, normalize(make_family(c.family), {L.theta0}), v);
  std::function<double(double)> r0;
  if (L.local) {
    SimScenario sc;
    sc.theta0 = L.theta0;
    sc.n = L.n;
    sc.model = model;
    sc.alternative = {AltKind::Local, L.local->r, 0.0, L.local->scale};
    auto st = std::make_shared<SimTransform>(sc);
    r0 = [st](double y) { return st->r0(y); };
  }
  const LimitLawObjects objects(oracle, L.quadrature, r0);
  const NystromResult r = nystrom_limit_quantile(objects, L.nodes, L.sims, L.alpha, c.seed_or_zero(), c.workers);
  Json j = to_json(r);
  j["c10"] = objects.c10();
  j["s_window"] = {objects.s_window().lo, objects.s_window().hi};
  j["quadrature_nodes"] = objects.s_nodes().size();
  j["alpha"] = L.alpha;
  if (L.local) j["c_const"] = objects.c_const();
  return j;
}

Json run_curves(const RunConfig& c, std::string& csv) {
  CurveConfig cc;
  cc.theta0 = c.curves.theta0;
  cc.r = c.curves.r;
  cc.c = c.curves.c;
  cc.y_range = c.curves.y_range;
  cc.n_points = c.curves.n_points;
  cc.n = c.curves.n;
  cc.seed = c.seed_or_zero();
  const CurveTable t = curve_grid(cc, c.npt, c.test);
  csv = curves_csv(t);
  return to_json(t);
}

}  // namespace

RunReport run(const RunConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunReport rep;
  Json result;
  switch (config.command) {
    case Command::Fit: result = run_fit(config, rep.csv); break;
    case Command::Test: result = run_test(config); break;
    case Command::RelevantTest: result = run_relevant(config); break;
    case Command::Simulate: result = run_simulate(config, rep.csv); break;
    case Command::LimitLaw: result = run_limit_law(config); break;
    case Command::Curves: result = run_curves(config, rep.csv); break;
  }
  rep.json = {
      {"tool", "transpec"},
      {"version", TRANSPEC_VERSION},
      {"schema_version", kReportSchemaVersion},
      {"command", command_name(config.command)},
      {"config", embedded_config(config)},
      {"config_hash", hex64(config_hash(config))},
      {"result", std::move(result)},
  };
  if (config.timing)
    rep.json["timing"] = {
        {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
        {"workers", config.workers}};
  return rep;
}

std::string render(const Json& report) { return report.dump(2) + "\n"; }

Json error_payload(const std::exception& e) {
  Json err = {{"message", e.what()}};
  if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
    err["kind"] = "ParseError";
    err["line"] = pe->line();
    err["column"] = pe->column();
  } else if (const auto* te = dynamic_cast<const Error*>(&e)) {
    err["kind"] = std::string(error_kind_name(te->kind()));
  } else {
    err["kind"] = "Internal";
  }
  return {{"error", err}};
}

int exit_code(const std::exception& e) noexcept {
  if (const auto* te = dynamic_cast<const Error*>(&e)) return te->is_input_error() ? 2 : 1;
  return 1;
}

}  // namespace transpec
