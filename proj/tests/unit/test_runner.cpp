#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "regmod/errors.hpp"
#include "regmod/report_io.hpp"
#include "regmod/runner.hpp"
#include "../support/oracles.hpp"

using namespace regmod;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
  std::random_device rd;
  const fs::path p = fs::temp_directory_path() / ("regmod-test-" + tag + "-" + std::to_string(rd()));
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool keys_sorted(const nlohmann::ordered_json& j) {
  if (j.is_object()) {
    std::string prev;
    bool first = true;
    for (const auto& [k, v] : j.items()) {
      if (!first && !(prev < k)) return false;
      prev = k;
      first = false;
      if (!keys_sorted(v)) return false;
    }
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (!keys_sorted(v)) return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("cli-runner") {

TEST_CASE("number formatting") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(3.0) == "3");
  CHECK(format_number(kInfinity) == "inf");
  CHECK(format_number(-kInfinity) == "-inf");
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("a seed is mandatory") {
  const std::string text = R"({"name": "s", "runs": [{"instance": "zq3"}]})";
  try {
    (void)parse_suite(text, oracle::data_dir());
    FAIL("expected a usage error");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("seed required") != std::string::npos);
  }
  SuiteOverrides ov;
  ov.seed = 3;
  CHECK(parse_suite(text, oracle::data_dir(), ov).runs.front().seed == 3);
}

TEST_CASE("seed precedence is override, run, suite") {
  const std::string text = R"({"name": "s", "seed": 1, "runs": [{"instance": "zq3", "seed": 2}, {"instance": "abs"}]})";
  const auto a = parse_suite(text, oracle::data_dir());
  CHECK(a.runs[0].seed == 2);
  CHECK(a.runs[1].seed == 1);
  SuiteOverrides ov;
  ov.seed = 9;
  const auto b = parse_suite(text, oracle::data_dir(), ov);
  CHECK(b.runs[0].seed == 9);
  CHECK(b.runs[1].seed == 9);
}

TEST_CASE("schema errors name the offending path") {
  const auto expect_path = [](const std::string& text, const std::string& path) {
    CAPTURE(text);
    try {
      (void)parse_suite(text, oracle::data_dir());
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(e.path() == path);
    }
  };
  expect_path(R"({"seed": 1, "runs": [{"instance": "zq3"}], "colour": 1})", "colour");
  expect_path(R"({"seed": 1, "runs": [{"instance": "zq3", "nn": 4}]})", "runs[0].nn");
  expect_path(R"({"seed": 1, "runs": [{"instance": "zq3", "n": -4}]})", "runs[0].n");
  expect_path(R"({"seed": 1, "runs": []})", "runs");
  expect_path(R"({"seed": 1, "runs": [{"radii": [0.1]}]})", "runs[0].instance");
  expect_path("{not json", "$");
}

TEST_CASE("instance resolution") {
  CHECK(resolve_instance("zq3", oracle::data_dir()).dimension == 3);
  CHECK(resolve_instance((oracle::data_dir() / "catalog" / "abs.json").string(), oracle::data_dir()).dimension == 1);
  CHECK_THROWS_AS(resolve_instance("no-such-thing", oracle::data_dir()), ConfigError);
  const auto names = list_catalog(oracle::data_dir());
  CHECK(names.size() == 12);
  CHECK(std::is_sorted(names.begin(), names.end()));
}

TEST_CASE("bundled suite runs, refuses to overwrite and reproduces bytes") {
  const fs::path out = scratch_dir("suite");
  SuiteOverrides ov;
  ov.out_dir = out;
  ov.jobs = 2;
  auto cfg = load_suite("flagship", oracle::data_dir(), ov);
  const auto first = run_suite(cfg);
  CHECK(first.exit_code == 0);
  REQUIRE(first.runs.size() == 5);
  std::vector<std::string> reports;
  for (const auto& r : first.runs) {
    CAPTURE(r.label);
    CHECK(r.completed);
    const fs::path rp = out / r.label / "report.json";
    REQUIRE(fs::exists(rp));
    reports.push_back(slurp(rp));
    const auto j = nlohmann::ordered_json::parse(reports.back());
    CHECK(keys_sorted(j));
    CHECK(j["checks"].size() == 8);
    CHECK(reports.back().back() == '\n');
  }

  const auto blocked = run_suite(cfg);
  CHECK(blocked.exit_code == 2);
  for (const auto& r : blocked.runs) CHECK(r.diagnostic.find("refusing to overwrite") != std::string::npos);

  cfg.force = true;
  cfg.jobs = 1;
  const auto again = run_suite(cfg);
  CHECK(again.exit_code == 0);
  for (std::size_t i = 0; i < again.runs.size(); ++i) {
    CHECK(slurp(out / again.runs[i].label / "report.json") == reports[i]);
  }
  fs::remove_all(out);
}

TEST_CASE("a failing run does not stop the others") {
  const fs::path out = scratch_dir("mixed");
  SuiteOverrides ov;
  ov.out_dir = out;
  const auto cfg = parse_suite(
      R"({"name": "mixed", "seed": 5, "runs": [{"instance": "missing-entry"}, {"instance": "half-square", "n": 64}]})",
      oracle::data_dir(), ov);
  const auto res = run_suite(cfg);
  REQUIRE(res.runs.size() == 2);
  CHECK_FALSE(res.runs[0].completed);
  CHECK_FALSE(res.runs[0].diagnostic.empty());
  CHECK(res.runs[1].completed);
  CHECK(res.exit_code >= 2);
  CHECK(fs::exists(out / res.runs[1].label / "report.json"));
  CHECK(fs::exists(out / res.runs[1].label / "flow.csv"));
  fs::remove_all(out);
}

TEST_CASE("duplicate instances get distinct labels") {
  const fs::path out = scratch_dir("dup");
  SuiteOverrides ov;
  ov.out_dir = out;
  const auto cfg = parse_suite(
      R"({"seed": 5, "runs": [{"instance": "abs", "n": 64}, {"instance": "abs", "n": 64, "seed": 6}]})",
      oracle::data_dir(), ov);
  const auto res = run_suite(cfg);
  REQUIRE(res.runs.size() == 2);
  CHECK(res.runs[0].label != res.runs[1].label);
  fs::remove_all(out);
}

}
