#include <string>

#include "doctest.h"
#include "transpec/cli.hpp"
#include "transpec/config.hpp"
#include "transpec/errors.hpp"

using namespace transpec;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Internal;
}

}  // namespace

TEST_CASE("config round trip") {
  RunConfig c;
  c.command = Command::Test;
  c.seed = 77;
  c.workers = 4;
  c.alphas = {0.01, 0.2};
  c.bootstrap.B = 123;
  c.bootstrap.g_method = RegressionMethod::LocalLinear;
  c.test.weight.kind = WeightKind::Trimmed;
  c.relevant.eta = 0.3;
  c.relevant.m_n = 17;
  c.simulate.table = 4;
  c.simulate.cells = {"null", "r1 c=0.4"};
  c.limit_law.local = LocalSpec{RId::R2, 0.5};
  c.curves.y_range = Interval{-1.0, 2.0};
  const Json j = to_json(c);
  const RunConfig back = config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.workers == 4);
  CHECK(back.bootstrap.g_method == RegressionMethod::LocalLinear);
  CHECK(back.limit_law.local->r == RId::R2);
  CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("hash ignores workers and output paths only") {
  RunConfig a;
  a.seed = 1;
  RunConfig b = a;
  b.workers = 8;
  b.output = "out.json";
  b.csv = "-";
  CHECK(config_hash(a) == config_hash(b));
  CHECK(canonical_dump(a) == canonical_dump(b));
  CHECK_FALSE(embedded_config(a).contains("workers"));
  b.seed = 2;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.bootstrap.B = 251;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK(kind_of([] { (void)config_from_json(Json::parse(R"({"bogus": 1})")); }) == ErrorKind::InvalidConfig);
  CHECK(kind_of([] { (void)config_from_json(Json::parse(R"({"bootstrap": {"Bee": 3}})")); }) ==
        ErrorKind::InvalidConfig);
  CHECK(kind_of([] { (void)config_from_json(Json::parse(R"({"command": "frobnicate"})")); }) ==
        ErrorKind::InvalidConfig);
  CHECK(kind_of([] { (void)config_from_json(Json::parse(R"({"bootstrap": {"B": "many"}})")); }) ==
        ErrorKind::InvalidConfig);
  RunConfig c;
  merge_json(c, Json::parse(R"({"bootstrap": {"B": 300}})"));
  CHECK(c.bootstrap.B == 300);
  CHECK(c.bootstrap.m == BootstrapConfig{}.m);
}

TEST_CASE("validate") {
  RunConfig c;
  c.command = Command::Test;
  c.data = TRANSPEC_TEST_DATA_DIR "/does-not-exist.csv";
  c.seed = 1;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::InvalidConfig);
  c.command = Command::Simulate;
  c.data.clear();
  c.seed.reset();
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::InvalidConfig);
  c.seed = 3;
  c.alphas = {1.5};
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("csv: column order, extras and quoting") {
  const Dataset a = parse_dataset_csv("y,x1,x2\n1,2,3\n4,5,6\n");
  const Dataset b = parse_dataset_csv("id,x2,\"y\",x1\r\n7,3,1,2\r\n\r\n8,6,4,5\n");
  CHECK(a == b);
  CHECK(a.dx() == 2);
  CHECK(a.x(1, 0) == 5.0);
  CHECK(a.x(1, 1) == 6.0);
  const Dataset c = parse_dataset_csv(dataset_csv(a));
  CHECK(c == a);
  const Dataset round = parse_dataset_csv("y,x1\n0.1,+1e-3\n");
  CHECK(round.x(0) == 1e-3);
}

TEST_CASE("csv errors carry line and column") {
  auto parse_error = [](const char* text, std::size_t line, std::size_t col) {
    try {
      (void)parse_dataset_csv(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == line);
      CHECK(e.column() == col);
      CHECK(error_payload(e)["error"]["line"] == line);
    }
  };
  parse_error("y,x1\n1,2\n3,abc\n", 3, 2);
  parse_error("y,x1\n1,2\n\n3\n", 4, 2);
  parse_error("y,x1\n1,nan\n", 2, 2);
  parse_error("y,x1,y\n1,2,3\n", 1, 3);

  CHECK(kind_of([] { (void)parse_dataset_csv("x1\n1\n"); }) == ErrorKind::MissingColumn);
  CHECK(kind_of([] { (void)parse_dataset_csv("y,x2\n1,2\n"); }) == ErrorKind::MissingColumn);
  CHECK(kind_of([] { (void)parse_dataset_csv("y,x1,x3\n1,2,3\n"); }) == ErrorKind::MissingColumn);
  CHECK(kind_of([] { (void)parse_dataset_csv("y,x1\n"); }) == ErrorKind::MissingColumn);
  CHECK(kind_of([] { (void)parse_dataset_csv(""); }) == ErrorKind::MissingColumn);
}

TEST_CASE("error payload and exit codes") {
  const Error input(ErrorKind::ZeroVariance, "flat");
  CHECK(exit_code(input) == 2);
  CHECK(error_payload(input)["error"]["kind"] == "ZeroVariance");
  const Error internal(ErrorKind::Internal, "bug");
  CHECK(exit_code(internal) == 1);
  const std::runtime_error other("x");
  CHECK(exit_code(other) == 1);
  CHECK(error_payload(other)["error"]["kind"] == "Internal");
}
