#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gfd/harness.hpp"

using namespace gfd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "gfd_unit_harness";
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

// stdout of the CLI, with its exit status
std::pair<int, std::string> run_cli(const std::string& args) {
  const std::string cmd = std::string(GFD_BINARY) + " " + args + " 2>/dev/null";
  FILE* f = popen(cmd.c_str(), "r");
  REQUIRE(f != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t k = std::fread(buf, 1, sizeof buf, f)) out.append(buf, k);
  const int status = pclose(f);
  return {WEXITSTATUS(status), out};
}

std::vector<std::string> csv_header(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> cols;
  std::stringstream s(line);
  for (std::string c; std::getline(s, c, ',');) cols.push_back(c);
  return cols;
}

ComparabilityReport sample_report() {
  ComparabilityReport r;
  r.suite = "green";
  r.anchors = {"two-sided estimate"};
  for (int k = 1; k <= 3; ++k) {
    RatioRow row;
    row.label = "interior";
    row.inputs = {{"x_d", 0.1 * k}, {"y_d", 0.5}};
    row.numeric = 1.0 / 3.0 * k;
    row.closed_form = 0.3 * k;
    row.ratio = row.numeric / row.closed_form;
    r.ratios.push_back(row);
  }
  r.band_limit = 20.0;
  r.slopes.push_back({"x_d", 1.0, 0.98, 0.01, 0.1, true});
  r.checks.push_back({"max G kappa", 0.99, 1.05, false, true});
  finalize_report(r);
  return r;
}

}  // namespace

TEST_CASE("fit_loglog_slope") {
  std::vector<std::pair<double, double>> sq, flat, logged;
  for (int k = 3; k <= 9; ++k) {
    const double s = std::ldexp(1.0, -k);
    sq.emplace_back(s, 5.0 * s * s);
    flat.emplace_back(s, 2.5);
    logged.emplace_back(s, std::pow(s, 1.5) * std::log(1.0 / s));
  }
  CHECK(std::abs(fit_loglog_slope(sq).slope - 2.0) <= 1e-12);
  CHECK(fit_loglog_slope(sq).log_contaminated == false);
  CHECK(std::abs(fit_loglog_slope(flat).slope) <= 1e-12);
  const auto f = fit_loglog_slope(logged);
  // the log lowers the local slope to 1.5 - 1/log(1/s)
  CHECK(f.slope > 1.1);
  CHECK(f.slope < 1.5);
  CHECK(f.log_contaminated);
  CHECK(compare_power_vs_log(logged, 1.0).log_preferred);
  CHECK_FALSE(compare_power_vs_log(sq, 1.0).log_preferred);
  CHECK_THROWS_AS(fit_loglog_slope({{0.1, 1.0}, {0.2, 2.0}}), Error);
}

TEST_CASE("report serialization") {
  const auto r = sample_report();
  CHECK(r.verdict);
  CHECK(r.band_max / r.band_min == doctest::Approx(1.0));
  json j = r;
  CHECK(j.get<ComparabilityReport>() == r);
  CHECK(json::parse(j.dump()).get<ComparabilityReport>() == r);

  const auto dir = scratch();
  emit_report(r, (dir / "r.csv").string(), (dir / "r.json").string());
  const std::string csv = slurp(dir / "r.csv");
  CHECK(count_lines(csv) == 1 + 3);
  CHECK(csv.find("0.33333333333333331") != std::string::npos);  // 17 significant digits
  CHECK(json::parse(slurp(dir / "r.json")).get<ComparabilityReport>() == r);

  ComparabilityReport empty;
  empty.suite = "green";
  try {
    emit_report(empty, (dir / "e.csv").string(), (dir / "e.json").string());
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptySuite);
  }

  auto bad = r;
  bad.checks[0].pass = false;
  finalize_report(bad);
  CHECK_FALSE(bad.verdict);
}

TEST_CASE("run configs") {
  const auto dir = scratch();
  std::ofstream(dir / "p.json") << R"({"d":2,"alpha":1.0,"beta":[0,0,0,0],"p":0.5})";
  std::ofstream(dir / "run.json") << R"({
    "params_file": "p.json", "threads": 1,
    "suites": [{"suite": "lemma61"},
               {"suite": "green", "params": {"d":2,"alpha":1.0,"beta":[0.5,0.3,0,0],"p":0.9},
                "solver": {"lateral_n": 8, "vertical_n": 8}}]})";
  const auto cfgs = load_run_configs((dir / "run.json").string());
  REQUIRE(cfgs.size() == 2);
  CHECK(cfgs[0].suite == "lemma61");
  CHECK(cfgs[0].params.p == 0.5);
  CHECK(cfgs[0].threads == 1);
  CHECK(cfgs[1].params.p == 0.9);
  CHECK(cfgs[1].solver.lateral_n == 8);
  CHECK(cfgs[1].solver.grading == SolverSettings{}.grading);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"suite":"nope","params_file":"p.json"})")), Error);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"suite":"green"})")), Error);
}

TEST_CASE("small suites are deterministic and pass") {
  const json j = json::parse(R"({"suite":"green","threads":1,
    "params":{"d":2,"alpha":1.0,"beta":[0.5,0.3,0,0],"p":0.9},
    "solver":{"lateral_n":16,"vertical_n":16,"grading":1.5},
    "sweep":{"families":[{"kind":"interior","cells":[1,4]}]}})");
  const auto a = run_suite(parse_run_config(j));
  const auto b = run_suite(parse_run_config(j));
  CHECK(a == b);
  CHECK(!a.ratios.empty());
  CHECK(!a.anchors.empty());
  CHECK(a.band_max / a.band_min <= 20.0);

  const auto l = run_suite(parse_run_config(
      json::parse(R"({"suite":"lemma61","params":{"d":2,"alpha":1.0,"beta":[0,0,0,0],"p":0.5}})")));
  CHECK(l.verdict);

  // the boundary Harnack suite refuses parameters where neither outcome is known
  json bhp = j;
  bhp["suite"] = "bhp";
  bhp["params"]["beta"] = {0.6, 0.3, 0, 0.5};
  bhp["params"]["p"] = 1.4;
  bhp.erase("sweep");
  try {
    run_suite(parse_run_config(bhp));
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPrecondition);
  }
}

TEST_CASE("command line") {
  const auto dir = scratch();
  const std::string params = (dir / "cli_p.json").string();
  std::ofstream(params) << R"({"d":2,"alpha":1.0,"beta":[0.5,0.3,0,0],"p":0.9})";

  auto [rc, out] = run_cli("constant --params " + params + " --tol 1e-8");
  CHECK(rc == 0);
  const json c = json::parse(out);
  CHECK(c.at("value").get<double>() > 0.0);
  CHECK(c.at("abs_error").get<double>() <= 1e-8 * c.at("value").get<double>());
  CHECK(c.at("evaluations").get<long>() > 0);

  std::tie(rc, out) = run_cli("estimate --params " + params + " --x \"0,0.01\" --y \"1,0.02\"");
  CHECK(rc == 0);
  CHECK(json::parse(out).dump().find("PolyPoly") != std::string::npos);

  const fs::path bands = dir / "bands.csv";
  std::tie(rc, out) = run_cli("verify-integrals --params " + params + " --suite lemma61 --out " + bands.string());
  CHECK(rc == 0);
  auto h = csv_header(bands);
  REQUIRE(h.size() >= 4);
  CHECK(h.front() == "case");
  CHECK(h[h.size() - 3] == "numeric");
  CHECK(h[h.size() - 2] == "rhs");
  CHECK(h.back() == "ratio");

  const fs::path sol = dir / "out.csv";
  std::tie(rc, out) =
      run_cli("solve --params " + params + " --grid 8x8 --grading 1.4 --task potential --out " + sol.string());
  CHECK(rc == 0);
  h = csv_header(sol);
  CHECK(h == std::vector<std::string>{"cell", "x_tilde1", "x_d", "value"});
  CHECK(count_lines(slurp(sol)) == 1 + 64);

  std::tie(rc, out) = run_cli("mc --params " + params +
                              " --domain \"1,1\" --x0 \"0,0.05\" --paths 200 --seed 1 --task potential --gamma 0");
  CHECK(rc == 0);
  const json m = json::parse(out);
  CHECK(m.at("mean").get<double>() > 0.0);
  CHECK(m.at("std_error").get<double>() > 0.0);

  std::tie(rc, out) = run_cli("constant --params " + (dir / "missing.json").string());
  CHECK(rc != 0);
  std::tie(rc, out) = run_cli("solve --params " + params + " --grid 8x8 --grading 3 --task green --out " + sol.string());
  CHECK(rc != 0);
}
