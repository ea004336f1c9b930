#include "transpec/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "transpec/errors.hpp"

namespace transpec {

namespace {

template <class E>
struct NameTable {
  std::initializer_list<std::pair<E, const char*>> entries;

  std::string name(E e) const {
    for (const auto& [k, v] : entries)
      if (k == e) return v;
    fail(ErrorKind::Internal, "unnamed enum value");
  }
  E parse(const std::string& s, const char* what) const {
    for (const auto& [k, v] : entries)
      if (s == v) return k;
    std::string opts;
    for (const auto& [k, v] : entries) opts += std::string(opts.empty() ? "" : ", ") + v;
    fail(ErrorKind::InvalidConfig, std::string(what) + ": unknown value '" + s + "' (expected " + opts + ")");
  }
};

const NameTable<Command> kCommands{{{Command::Fit, "fit"},
                                    {Command::Test, "test"},
                                    {Command::RelevantTest, "relevant-test"},
                                    {Command::Simulate, "simulate"},
                                    {Command::LimitLaw, "limit-law"},
                                    {Command::Curves, "curves"}}};
const NameTable<KernelKind> kKernels{{{KernelKind::Biweight, "biweight"},
                                      {KernelKind::PaperBiweight, "paper-biweight"},
                                      {KernelKind::Uniform, "uniform"},
                                      {KernelKind::Gaussian, "gaussian"},
                                      {KernelKind::Cauchy, "cauchy"}}};
const NameTable<VWeightKind> kVKinds{{{VWeightKind::Smooth, "smooth"}, {VWeightKind::Uniform, "uniform"}}};
const NameTable<DenominatorPolicy> kPolicies{
    {{DenominatorPolicy::Exclude, "exclude"}, {DenominatorPolicy::Error, "error"}}};
const NameTable<WeightKind> kWeights{{{WeightKind::Flat, "flat"}, {WeightKind::Trimmed, "trimmed"}}};
const NameTable<SmoothingKind> kSmoothing{
    {{SmoothingKind::Gaussian, "gaussian"}, {SmoothingKind::Uniform, "uniform"}}};
const NameTable<RegressionMethod> kRegression{
    {{RegressionMethod::NadarayaWatson, "nadaraya-watson"}, {RegressionMethod::LocalLinear, "local-linear"}}};

Json interval_json(const Interval& i) { return Json::array({i.lo, i.hi}); }

template <class T>
Json opt_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json opt_interval(const std::optional<Interval>& v) { return v ? interval_json(*v) : Json(nullptr); }

Json intervals_json(const std::vector<Interval>& v) {
  Json a = Json::array();
  for (const auto& i : v) a.push_back(interval_json(i));
  return a;
}

/// Reads members of one JSON object and rejects any key it was not asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorKind::InvalidConfig, where() + " must be an object");
  }
  ObjectReader(const ObjectReader&) = delete;
  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) fail(ErrorKind::InvalidConfig, "unknown key '" + qualified(k) + "'");
  }

  const Json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, double& out) {
    if (const Json* v = get(key)) out = number(*v, key);
  }
  void read(const std::string& key, bool& out) {
    if (const Json* v = get(key)) {
      if (!v->is_boolean()) fail(ErrorKind::InvalidConfig, qualified(key) + " must be a boolean");
      out = v->get<bool>();
    }
  }
  void read(const std::string& key, std::size_t& out) {
    if (const Json* v = get(key)) out = count(*v, key);
  }
  void read(const std::string& key, std::string& out) {
    if (const Json* v = get(key)) out = string(*v, key);
  }
  void read(const std::string& key, std::optional<double>& out) {
    if (const Json* v = get(key)) out = v->is_null() ? std::nullopt : std::optional<double>(number(*v, key));
  }
  void read(const std::string& key, std::optional<std::size_t>& out) {
    if (const Json* v = get(key)) out = v->is_null() ? std::nullopt : std::optional<std::size_t>(count(*v, key));
  }
  void read(const std::string& key, std::optional<Interval>& out) {
    if (const Json* v = get(key)) out = v->is_null() ? std::nullopt : std::optional<Interval>(interval(*v, key));
  }
  void read(const std::string& key, std::vector<Interval>& out) {
    if (const Json* v = get(key)) {
      if (!v->is_array()) fail(ErrorKind::InvalidConfig, qualified(key) + " must be a list of [lo, hi]");
      out.clear();
      for (const auto& e : *v) out.push_back(interval(e, key));
    }
  }
  void read(const std::string& key, std::vector<double>& out) {
    if (const Json* v = get(key)) {
      if (!v->is_array()) fail(ErrorKind::InvalidConfig, qualified(key) + " must be a list of numbers");
      out.clear();
      for (const auto& e : *v) out.push_back(number(e, key));
    }
  }
  void read(const std::string& key, std::vector<std::string>& out) {
    if (const Json* v = get(key)) {
      if (!v->is_array()) fail(ErrorKind::InvalidConfig, qualified(key) + " must be a list of strings");
      out.clear();
      for (const auto& e : *v) out.push_back(string(e, key));
    }
  }
  template <class E>
  void read_enum(const std::string& key, E& out, const NameTable<E>& table) {
    if (const Json* v = get(key)) out = table.parse(string(*v, key), qualified(key).c_str());
  }

  [[nodiscard]] std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  double number(const Json& v, const std::string& key) const {
    if (!v.is_number()) fail(ErrorKind::InvalidConfig, qualified(key) + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(ErrorKind::InvalidConfig, qualified(key) + " must be finite");
    return d;
  }
  std::size_t count(const Json& v, const std::string& key) const {
    if (!v.is_number_integer() || v.get<long long>() < 0)
      fail(ErrorKind::InvalidConfig, qualified(key) + " must be a nonnegative integer");
    return v.get<std::size_t>();
  }
  std::string string(const Json& v, const std::string& key) const {
    if (!v.is_string()) fail(ErrorKind::InvalidConfig, qualified(key) + " must be a string");
    return v.get<std::string>();
  }
  Interval interval(const Json& v, const std::string& key) const {
    if (!v.is_array() || v.size() != 2)
      fail(ErrorKind::InvalidConfig, qualified(key) + " intervals must be [lo, hi]");
    Interval i{number(v[0], key), number(v[1], key)};
    if (!(i.lo < i.hi)) fail(ErrorKind::InvalidConfig, qualified(key) + " interval needs lo < hi");
    return i;
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json npt_json(const NptConfig& c) {
  return {
      {"paper_exact_kernel", c.paper_exact_kernel},
      {"median_kernel", kKernels.name(c.median_kernel)},
      {"h_u", opt_json(c.bandwidth.h_u)},
      {"h_x", c.bandwidth.h_x},
      {"b", opt_json(c.bandwidth.b)},
      {"b_scale", c.bandwidth.b_scale},
      {"b_exponent", c.bandwidth.b_exponent},
      {"n_x", c.n_x},
      {"n_u", c.n_u},
      {"v_support", intervals_json(c.v_support)},
      {"v_trim", c.v_trim},
      {"v_kind", kVKinds.name(c.v_kind)},
      {"anchor_a", c.anchor_a},
      {"anchor_b", c.anchor_b},
      {"quad_points", c.quad_points},
      {"denominator_floor", c.denominator_floor},
      {"s1_floor", c.s1_floor},
      {"denominator_policy", kPolicies.name(c.denominator_policy)},
      {"y_window", opt_interval(c.y_window)},
  };
}

void read_npt(const Json& j, NptConfig& c) {
  ObjectReader r(j, "npt");
  r.read("paper_exact_kernel", c.paper_exact_kernel);
  r.read_enum("median_kernel", c.median_kernel, kKernels);
  r.read("h_u", c.bandwidth.h_u);
  r.read("h_x", c.bandwidth.h_x);
  r.read("b", c.bandwidth.b);
  r.read("b_scale", c.bandwidth.b_scale);
  r.read("b_exponent", c.bandwidth.b_exponent);
  r.read("n_x", c.n_x);
  r.read("n_u", c.n_u);
  r.read("v_support", c.v_support);
  r.read("v_trim", c.v_trim);
  r.read_enum("v_kind", c.v_kind, kVKinds);
  r.read("anchor_a", c.anchor_a);
  r.read("anchor_b", c.anchor_b);
  r.read("quad_points", c.quad_points);
  r.read("denominator_floor", c.denominator_floor);
  r.read("s1_floor", c.s1_floor);
  r.read_enum("denominator_policy", c.denominator_policy, kPolicies);
  r.read("y_window", c.y_window);
}

Json test_json(const TestConfig& c) {
  return {
      {"weight", kWeights.name(c.weight.kind)},
      {"trim_lower", c.weight.trim_lower},
      {"trim_upper", c.weight.trim_upper},
      {"c1_box", opt_interval(c.boxes.c1)},
      {"c2_box", opt_interval(c.boxes.c2)},
      {"grid", c.optimizer.grid},
      {"tolerance", c.optimizer.tolerance},
      {"max_iterations", c.optimizer.max_iterations},
  };
}

void read_test(const Json& j, TestConfig& c) {
  ObjectReader r(j, "test");
  r.read_enum("weight", c.weight.kind, kWeights);
  r.read("trim_lower", c.weight.trim_lower);
  r.read("trim_upper", c.weight.trim_upper);
  r.read("c1_box", c.boxes.c1);
  r.read("c2_box", c.boxes.c2);
  r.read("grid", c.optimizer.grid);
  r.read("tolerance", c.optimizer.tolerance);
  r.read("max_iterations", c.optimizer.max_iterations);
}

Json bootstrap_json(const BootstrapConfig& c) {
  return {
      {"m", c.m},
      {"B", c.B},
      {"a_n", c.a_n},
      {"b_n", c.b_n},
      {"kappa", kSmoothing.name(c.kappa)},
      {"ell", kSmoothing.name(c.ell)},
      {"g_bandwidth", opt_json(c.g_bandwidth)},
      {"g_method", kRegression.name(c.g_method)},
      {"extension", c.extension},
      {"max_failure_fraction", c.max_failure_fraction},
  };
}

void read_bootstrap(const Json& j, BootstrapConfig& c) {
  ObjectReader r(j, "bootstrap");
  r.read("m", c.m);
  r.read("B", c.B);
  r.read("a_n", c.a_n);
  r.read("b_n", c.b_n);
  r.read_enum("kappa", c.kappa, kSmoothing);
  r.read_enum("ell", c.ell, kSmoothing);
  r.read("g_bandwidth", c.g_bandwidth);
  r.read_enum("g_method", c.g_method, kRegression);
  r.read("extension", c.extension);
  r.read("max_failure_fraction", c.max_failure_fraction);
}

Json relevant_json(const RelevantConfig& c) {
  return {
      {"eta", c.eta},
      {"alpha", c.alpha},
      {"m_n", opt_json(c.m_n)},
      {"permute", c.permute},
      {"scale_by_c1", c.scale_by_c1},
  };
}

void read_relevant(const Json& j, RelevantConfig& c) {
  ObjectReader r(j, "relevant");
  r.read("eta", c.eta);
  r.read("alpha", c.alpha);
  r.read("m_n", c.m_n);
  r.read("permute", c.permute);
  r.read("scale_by_c1", c.scale_by_c1);
}

Json simulate_json(const SimulateOptions& c) {
  return {
      {"table", c.table},
      {"runs", c.runs},
      {"runs_alt", opt_json(c.runs_alt)},
      {"n", c.n},
      {"cells", c.cells},
      {"max_failure_fraction", c.max_failure_fraction},
  };
}

void read_simulate(const Json& j, SimulateOptions& c) {
  ObjectReader r(j, "simulate");
  std::size_t table = static_cast<std::size_t>(c.table);
  r.read("table", table);
  c.table = static_cast<int>(table);
  r.read("runs", c.runs);
  r.read("runs_alt", c.runs_alt);
  r.read("n", c.n);
  r.read("cells", c.cells);
  r.read("max_failure_fraction", c.max_failure_fraction);
}

Json limit_json(const LimitLawOptions& c) {
  Json local = nullptr;
  if (c.local) local = {{"r", r_name(c.local->r)}, {"scale", c.local->scale}};
  const auto& q = c.quadrature;
  return {
      {"theta0", c.theta0},
      {"nodes", c.nodes},
      {"sims", c.sims},
      {"alpha", c.alpha},
      {"v_support", intervals_json(c.v_support)},
      {"local", local},
      {"n", c.n},
      {"y_window", opt_interval(q.y_window)},
      {"s_tail", q.s_tail},
      {"s_panels", q.s_panels},
      {"s_points", q.s_points},
      {"z_x_panels", q.z_x_panels},
      {"z_x_points", q.z_x_points},
      {"z_s_points", q.z_s_points},
      {"z_s_tail", q.z_s_tail},
      {"gamma_floor", q.gamma_floor},
  };
}

void read_limit(const Json& j, LimitLawOptions& c) {
  ObjectReader r(j, "limit_law");
  r.read("theta0", c.theta0);
  r.read("nodes", c.nodes);
  r.read("sims", c.sims);
  r.read("alpha", c.alpha);
  r.read("v_support", c.v_support);
  if (const Json* v = r.get("local")) {
    if (v->is_null()) {
      c.local.reset();
    } else {
      LocalSpec spec = c.local.value_or(LocalSpec{});
      ObjectReader lr(*v, "limit_law.local");
      std::string rn = r_name(spec.r);
      lr.read("r", rn);
      spec.r = parse_r(rn);
      lr.read("scale", spec.scale);
      c.local = spec;
    }
  }
  r.read("n", c.n);
  auto& q = c.quadrature;
  r.read("y_window", q.y_window);
  r.read("s_tail", q.s_tail);
  r.read("s_panels", q.s_panels);
  r.read("s_points", q.s_points);
  r.read("z_x_panels", q.z_x_panels);
  r.read("z_x_points", q.z_x_points);
  r.read("z_s_points", q.z_s_points);
  r.read("z_s_tail", q.z_s_tail);
  r.read("gamma_floor", q.gamma_floor);
}

Json curves_json(const CurvesOptions& c) {
  return {
      {"theta0", c.theta0}, {"r", r_name(c.r)},           {"c", c.c},
      {"y_range", opt_interval(c.y_range)}, {"n_points", c.n_points}, {"n", c.n},
  };
}

void read_curves(const Json& j, CurvesOptions& c) {
  ObjectReader r(j, "curves");
  r.read("theta0", c.theta0);
  std::string rn = r_name(c.r);
  r.read("r", rn);
  c.r = parse_r(rn);
  r.read("c", c.c);
  r.read("y_range", c.y_range);
  r.read("n_points", c.n_points);
  r.read("n", c.n);
}

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::InvalidConfig, what);
}

}  // namespace

std::string command_name(Command c) { return kCommands.name(c); }
Command parse_command(const std::string& name) { return kCommands.parse(name, "command"); }

void RunConfig::validate() const {
  const bool needs_data =
      command == Command::Fit || command == Command::Test || command == Command::RelevantTest;
  if (needs_data) {
    require(!data.empty(), "a data file is required for " + command_name(command));
    if (!std::filesystem::is_regular_file(data))
      fail(ErrorKind::InvalidConfig, "data file not found: " + data);
  }
  if ((command == Command::Test || command == Command::Simulate) && !seed)
    fail(ErrorKind::InvalidConfig, "--seed is required for " + command_name(command));
  const auto names = registered_families();
  require(std::find(names.begin(), names.end(), family) != names.end(), "unknown family '" + family + "'");
  require(workers >= 1, "workers must be at least 1");
  require(!alphas.empty(), "alphas must not be empty");
  for (double a : alphas) require(a > 0.0 && a < 1.0, "alphas must lie in (0, 1)");

  npt.validate();
  require(test.weight.trim_lower >= 0.0 && test.weight.trim_upper >= 0.0 &&
              test.weight.trim_lower + test.weight.trim_upper < 1.0,
          "test.trim_lower and trim_upper must be nonnegative with sum below 1");
  require(test.optimizer.grid >= 2, "test.grid must be at least 2");
  require(test.optimizer.tolerance > 0.0, "test.tolerance must be positive");
  require(test.optimizer.max_iterations >= 1, "test.max_iterations must be at least 1");
  bootstrap.validate();
  require(relevant.eta >= 0.0, "relevant.eta must be nonnegative");
  require(relevant.alpha > 0.0 && relevant.alpha < 1.0, "relevant.alpha must lie in (0, 1)");

  require(simulate.table == 1 || simulate.table == 4, "simulate.table must be 1 or 4");
  require(simulate.runs >= 1, "simulate.runs must be at least 1");
  require(!simulate.runs_alt || *simulate.runs_alt >= 1, "simulate.runs_alt must be at least 1");
  require(simulate.n >= 10, "simulate.n must be at least 10");
  require(simulate.max_failure_fraction >= 0.0 && simulate.max_failure_fraction < 1.0,
          "simulate.max_failure_fraction must lie in [0, 1)");

  const auto& L = limit_law;
  require(L.theta0 >= 0.0 && L.theta0 <= 2.0, "limit_law.theta0 must lie in [0, 2]");
  require(L.nodes >= 50, "limit_law.nodes must be at least 50");
  require(L.sims >= 100, "limit_law.sims must be at least 100");
  require(L.alpha > 0.0 && L.alpha < 1.0, "limit_law.alpha must lie in (0, 1)");
  require(L.v_support.size() == 1, "limit_law.v_support must be a single interval");
  require(L.quadrature.s_tail > 0.0 && L.quadrature.s_tail < 0.5, "limit_law.s_tail must lie in (0, 0.5)");
  require(L.quadrature.s_panels >= 1 && L.quadrature.s_points >= 1 && L.quadrature.z_x_panels >= 1 &&
              L.quadrature.z_x_points >= 1 && L.quadrature.z_s_points >= 1,
          "limit_law quadrature sizes must be positive");
  require(L.quadrature.z_s_tail > 0.0, "limit_law.z_s_tail must be positive");
  require(L.n >= 1, "limit_law.n must be positive");

  require(curves.theta0 >= 0.0 && curves.theta0 <= 2.0, "curves.theta0 must lie in [0, 2]");
  require(curves.c >= 0.0 && curves.c <= 1.0, "curves.c must lie in [0, 1]");
  require(curves.n_points >= 2, "curves.n_points must be at least 2");
  require(curves.n >= 10, "curves.n must be at least 10");
}

Json to_json(const RunConfig& c, bool with_workers) {
  Json j = {
      {"command", command_name(c.command)},
      {"data", c.data},
      {"family", c.family},
      {"seed", opt_json(c.seed)},
      {"alphas", c.alphas},
      {"npt", npt_json(c.npt)},
      {"test", test_json(c.test)},
      {"bootstrap", bootstrap_json(c.bootstrap)},
      {"relevant", relevant_json(c.relevant)},
      {"simulate", simulate_json(c.simulate)},
      {"limit_law", limit_json(c.limit_law)},
      {"curves", curves_json(c.curves)},
      {"output", c.output},
      {"csv", c.csv},
      {"timing", c.timing},
  };
  if (with_workers) j["workers"] = c.workers;
  return j;
}

void merge_json(RunConfig& c, const Json& j) {
  ObjectReader r(j, "");
  std::string cmd = command_name(c.command);
  r.read("command", cmd);
  c.command = parse_command(cmd);
  r.read("data", c.data);
  r.read("family", c.family);
  if (const Json* v = r.get("seed")) {
    if (v->is_null()) {
      c.seed.reset();
    } else {
      if (!v->is_number_unsigned()) fail(ErrorKind::InvalidConfig, "seed must be a nonnegative integer");
      c.seed = v->get<std::uint64_t>();
    }
  }
  r.read("workers", c.workers);
  r.read("alphas", c.alphas);
  if (const Json* v = r.get("npt")) read_npt(*v, c.npt);
  if (const Json* v = r.get("test")) read_test(*v, c.test);
  if (const Json* v = r.get("bootstrap")) read_bootstrap(*v, c.bootstrap);
  if (const Json* v = r.get("relevant")) read_relevant(*v, c.relevant);
  if (const Json* v = r.get("simulate")) read_simulate(*v, c.simulate);
  if (const Json* v = r.get("limit_law")) read_limit(*v, c.limit_law);
  if (const Json* v = r.get("curves")) read_curves(*v, c.curves);
  r.read("output", c.output);
  r.read("csv", c.csv);
  r.read("timing", c.timing);
}

RunConfig config_from_json(const Json& j) {
  RunConfig c;
  merge_json(c, j);
  return c;
}

Json embedded_config(const RunConfig& config) {
  Json j = to_json(config, false);
  j.erase("output");
  j.erase("csv");
  return j;
}

std::string canonical_dump(const RunConfig& config) { return embedded_config(config).dump(); }

std::uint64_t config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_dump(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace transpec
