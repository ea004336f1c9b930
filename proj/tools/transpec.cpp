// transpec command-line tool.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "transpec/cli.hpp"
#include "transpec/errors.hpp"

using namespace transpec;

namespace {

struct Flags {
  std::string config_file;
  std::optional<std::string> data, family, output, csv;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::vector<double> alphas;
  bool timing = false;
  // test
  std::optional<std::size_t> B, m;
  std::optional<std::string> weight;
  // relevant-test
  std::optional<double> eta;
  std::optional<std::size_t> m_n;
  bool permute = false;
  // simulate
  std::optional<int> table;
  std::optional<std::size_t> runs, runs_alt, n;
  std::vector<std::string> cells;
  // limit-law and curves
  std::optional<double> theta0, c, local_scale;
  std::optional<std::size_t> nodes, sims, points;
  std::optional<std::string> r, local_r;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_st("transpec");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* lvl = std::getenv("TRANSPEC_LOG");
  spdlog::set_level(lvl ? spdlog::level::from_str(lvl) : spdlog::level::warn);
}

std::size_t env_workers() {
  const char* w = std::getenv("TRANSPEC_WORKERS");
  if (!w || !*w) return 1;
  char* end = nullptr;
  const long v = std::strtol(w, &end, 10);
  if (*end != '\0' || v < 1) fail(ErrorKind::InvalidConfig, "TRANSPEC_WORKERS must be a positive integer");
  return static_cast<std::size_t>(v);
}

RunConfig build_config(const std::string& command, const Flags& f) {
  RunConfig c;
  c.workers = env_workers();
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) fail(ErrorKind::InvalidConfig, "cannot open config file: " + f.config_file);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::parse_error& e) {
      fail(ErrorKind::InvalidConfig, std::string("config file is not valid JSON: ") + e.what());
    }
    // A whole report is accepted too; its embedded config is replayed.
    if (j.contains("config") && j.contains("result")) j = j["config"];
    merge_json(c, j);
  }
  c.command = parse_command(command);
  if (f.data) c.data = *f.data;
  if (f.family) c.family = *f.family;
  if (f.output) c.output = *f.output;
  if (f.csv) c.csv = *f.csv;
  if (f.seed) c.seed = *f.seed;
  if (f.workers) c.workers = *f.workers;
  if (!f.alphas.empty()) c.alphas = f.alphas;
  if (f.timing) c.timing = true;
  if (f.B) c.bootstrap.B = *f.B;
  if (f.m) c.bootstrap.m = *f.m;
  if (f.weight) c.test.weight.kind = *f.weight == "trimmed" ? WeightKind::Trimmed : WeightKind::Flat;
  if (f.eta) c.relevant.eta = *f.eta;
  if (f.m_n) c.relevant.m_n = *f.m_n;
  if (f.permute) c.relevant.permute = true;
  if (f.table) c.simulate.table = *f.table;
  if (f.runs) c.simulate.runs = *f.runs;
  if (f.runs_alt) c.simulate.runs_alt = *f.runs_alt;
  if (f.n) c.simulate.n = c.curves.n = *f.n;
  if (!f.cells.empty()) c.simulate.cells = f.cells;
  if (c.command == Command::LimitLaw) {
    if (f.theta0) c.limit_law.theta0 = *f.theta0;
    if (!f.alphas.empty()) c.limit_law.alpha = f.alphas.front();
  } else if (f.theta0) {
    c.curves.theta0 = *f.theta0;
  }
  if (f.nodes) c.limit_law.nodes = *f.nodes;
  if (f.sims) c.limit_law.sims = *f.sims;
  if (f.local_r) c.limit_law.local = LocalSpec{parse_r(*f.local_r), f.local_scale.value_or(1.0)};
  if (f.r) c.curves.r = parse_r(*f.r);
  if (f.c) c.curves.c = *f.c;
  if (f.points) c.curves.n_points = *f.points;
  return c;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    write_text(path, text);
  }
}

int fail_with(const std::exception& e) {
  std::cerr << error_payload(e).dump(2) << "\n";
  return exit_code(e);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Specification tests for parametric transformation classes"};
  app.set_version_flag("--version", std::string(TRANSPEC_VERSION));
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config_file, "JSON config or previous report to start from");
    sub->add_option("--family", f.family, "Parametric family name");
    sub->add_option("--seed", f.seed, "Seed for all randomness");
    sub->add_option("--workers", f.workers, "Worker threads (default: TRANSPEC_WORKERS or 1)")
        ->check(CLI::PositiveNumber);
    sub->add_option("-o,--output", f.output, "JSON report path (default: stdout)");
    sub->add_option("--csv", f.csv, "Side table path ('-' for stdout)");
    sub->add_flag("--timing", f.timing, "Record wall time in the report");
  };
  auto data_opt = [&](CLI::App* sub) { sub->add_option("--data", f.data, "CSV with columns y, x1..xd"); };

  auto* fit = app.add_subcommand("fit", "Estimate the transformation nonparametrically");
  common(fit);
  data_opt(fit);

  auto* test = app.add_subcommand("test", "Bootstrap goodness-of-fit test");
  common(test);
  data_opt(test);
  test->add_option("--alpha", f.alphas, "Levels (repeatable)");
  test->add_option("--B", f.B, "Bootstrap replications");
  test->add_option("--m", f.m, "Bootstrap sample size");
  test->add_option("--weight", f.weight, "flat or trimmed")->check(CLI::IsMember({"flat", "trimmed"}));

  auto* rel = app.add_subcommand("relevant-test", "Test of a relevant distance to the class");
  common(rel);
  data_opt(rel);
  rel->add_option("--eta", f.eta, "Threshold on the distance")->required();
  rel->add_option("--m-n", f.m_n, "Block size (default floor(n^(2/3)))");
  rel->add_flag("--permute", f.permute, "Shuffle observations before blocking");

  auto* sim = app.add_subcommand("simulate", "Rejection-rate study");
  common(sim);
  sim->add_option("--table", f.table, "1 or 4")->check(CLI::IsMember({1, 4}));
  sim->add_option("--runs", f.runs, "Monte Carlo runs for null cells");
  sim->add_option("--runs-alt", f.runs_alt, "Monte Carlo runs for alternative cells");
  sim->add_option("--n", f.n, "Sample size");
  sim->add_option("--cell", f.cells, "Only this cell label (repeatable)");
  sim->add_option("--alpha", f.alphas, "Levels (repeatable)");
  sim->add_option("--B", f.B, "Bootstrap replications");
  sim->add_option("--m", f.m, "Bootstrap sample size");

  auto* lim = app.add_subcommand("limit-law", "Null limit law by quadrature and Nystrom eigenvalues");
  common(lim);
  lim->add_option("--theta0", f.theta0, "Yeo-Johnson parameter of the null");
  lim->add_option("--nodes", f.nodes, "Nystrom nodes");
  lim->add_option("--sims", f.sims, "Draws from the limit law");
  lim->add_option("--alpha", f.alphas, "Level");
  lim->add_option("--local-r", f.local_r, "Local alternative direction r1, r2 or r3");
  lim->add_option("--local-scale", f.local_scale, "Multiplier on the local direction");

  auto* cur = app.add_subcommand("curves", "True, fitted and null-part transformation curves");
  common(cur);
  cur->add_option("--theta0", f.theta0, "Yeo-Johnson parameter");
  cur->add_option("--r", f.r, "Alternative r1, r2 or r3");
  cur->add_option("--c", f.c, "Mixing weight in [0, 1]");
  cur->add_option("--points", f.points, "Grid size");
  cur->add_option("--n", f.n, "Sample size behind the fit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail_with(Error(ErrorKind::InvalidConfig, e.what()));
  }

  try {
    const std::string command = app.get_subcommands().front()->get_name();
    RunConfig config = build_config(command, f);
    // curves prints its table when no destination is given
    if (config.command == Command::Curves && config.output.empty() && config.csv.empty()) config.csv = "-";
    spdlog::info("{} (config {}), {} worker(s)", command, hex64(config_hash(config)), config.workers);
    const RunReport rep = run(config);
    if (!(config.csv == "-" && config.output.empty())) emit(config.output, render(rep.json));
    if (!config.csv.empty()) {
      if (rep.csv.empty()) spdlog::warn("{} produces no side table; --csv ignored", command);
      else emit(config.csv, rep.csv);
    }
    spdlog::info("done");
    return 0;
  } catch (const std::exception& e) {
    return fail_with(e);
  }
}
