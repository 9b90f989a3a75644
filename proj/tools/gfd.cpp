#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gfd/closed_forms.hpp"
#include "gfd/harness.hpp"
#include "gfd/monte_carlo.hpp"
#include "gfd/nonlocal_solver.hpp"

using nlohmann::json;
using namespace gfd;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::pair<double, double> parse_pair(const std::string& text, const char* what) {
  const auto pt = parse_point(text, 2);
  if (!(pt.tilde[0] > 0.0) || !(pt.xd > 0.0)) throw Error(ErrorCode::kNonPositiveScale, std::string(what) + " must be positive");
  return {pt.tilde[0], pt.xd};
}

std::pair<int, int> parse_grid(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "grid must look like 64x64, got \"" + text + "\"");
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

json summary_of(const ComparabilityReport& r) {
  json j = r;
  j.erase("ratios");
  j["samples"] = r.ratios.size();
  return j;
}

std::vector<Box> default_exit_target(int d, double a, double b) {
  Box t;
  for (int k = 0; k < d - 1; ++k) {
    t.lo.push_back(-a);
    t.hi.push_back(a);
  }
  t.lo.push_back(3.0 * b);
  t.hi.push_back(4.0 * b);
  return {t};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Green function estimates for degenerate nonlocal operators in the half-space"};
  app.require_subcommand(1);

  std::string params_path;
  double tol = 1e-10;
  auto* constant = app.add_subcommand("constant", "killing constant C(alpha, p, B)");
  constant->add_option("--params", params_path, "params JSON")->required();
  constant->add_option("--tol", tol, "relative quadrature tolerance");

  std::string xs, ys;
  auto* estimate = app.add_subcommand("estimate", "closed-form Green function estimate and regime");
  estimate->add_option("--params", params_path)->required();
  estimate->add_option("--x", xs, "point, e.g. \"0,0.01\"")->required();
  estimate->add_option("--y", ys)->required();

  std::string suite, out;
  int threads = 0;
  std::optional<double> rel_tol;
  auto* verify = app.add_subcommand("verify-integrals", "quadrature oracles against closed forms");
  verify->add_option("--params", params_path)->required();
  verify->add_option("--suite", suite)->required()->check(CLI::IsMember({"lemma61", "cor62", "lemma63"}));
  verify->add_option("--out", out, "CSV path")->required();
  verify->add_option("--rel-tol", rel_tol, "oracle tolerance (suite default if unset)");
  verify->add_option("--threads", threads, "0 = all cores");

  std::string grid_text = "64x64", task, domain_text = "1,1", pole;
  double grading = 1.15, gamma = 0.0;
  auto* solve = app.add_subcommand("solve", "grid solver");
  solve->add_option("--params", params_path)->required();
  solve->add_option("--grid", grid_text, "lateral x vertical cells");
  solve->add_option("--grading", grading, "vertical growth ratio in (1,2]");
  solve->add_option("--task", task)->required()->check(CLI::IsMember({"green", "potential", "harmonic", "exit"}));
  solve->add_option("--out", out)->required();
  solve->add_option("--domain", domain_text, "\"a,b\" for D(a,b)");
  solve->add_option("--y", pole, "pole of the green task (default centre)");
  solve->add_option("--gamma", gamma, "exponent of the potential task");
  solve->add_option("--threads", threads);

  std::string x0_text;
  long paths = 10000;
  std::uint64_t seed = 1;
  auto* mc = app.add_subcommand("mc", "Monte Carlo estimates");
  mc->add_option("--params", params_path)->required();
  mc->add_option("--domain", domain_text);
  mc->add_option("--x0", x0_text)->required();
  mc->add_option("--paths", paths);
  mc->add_option("--seed", seed);
  mc->add_option("--task", task)->required()->check(CLI::IsMember({"potential", "exit"}));
  mc->add_option("--gamma", gamma);
  mc->add_option("--threads", threads);

  std::string config;
  std::optional<int> report_threads;
  auto* report = app.add_subcommand("report", "run configured suites");
  report->add_option("--config", config)->required();
  report->add_option("--out", out, "JSON path; CSVs go next to it")->required();
  report->add_option("--threads", report_threads, "overrides the config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*constant) {
      const auto params = load_params(params_path);
      const auto c = normalizing_constant(params, tol);
      std::cout << json{{"value", c.value}, {"abs_error", c.abs_error_estimate}, {"evaluations", c.evaluations}}.dump()
                << "\n";
    } else if (*estimate) {
      const auto params = load_params(params_path);
      const auto x = parse_point(xs, params.d), y = parse_point(ys, params.d);
      const auto e = green_estimate(x, y, params);
      const auto& f = e.factors;
      std::cout << json{{"value", e.value},
                        {"regime", {{"tag", to_string(e.regime.tag)}, {"a_p", e.regime.a_p}}},
                        {"factors",
                         {{"interior", f.interior},
                          {"min_power", f.min_power},
                          {"max_power", f.max_power},
                          {"log_factor", f.log_factor},
                          {"max_exponent", f.max_exponent},
                          {"log_exponent", f.log_exponent}}},
                        {"unified", green_estimate_unified(x, y, params)}}
                       .dump(2)
                << "\n";
    } else if (*verify) {
      RunConfig cfg;
      cfg.suite = suite;
      cfg.params = load_params(params_path);
      if (rel_tol) cfg.sweep["rel_tol"] = *rel_tol;
      cfg.threads = threads;
      const auto rep = run_integrals_suite(cfg);
      emit_report(rep, out, "");
      std::cout << summary_of(rep).dump(2) << "\n";
    } else if (*solve) {
      const auto params = load_params(params_path);
      const auto [nl, nv] = parse_grid(grid_text);
      const auto [a, b] = parse_pair(domain_text, "domain");
      SolverSettings s;
      s.lateral_n = nl;
      s.vertical_n = nv;
      s.grading = grading;
      s.half_width = a;
      s.height = b;
      const auto A = build_operator(params, s, threads);
      const Grid& g = A->grid();
      GridFunction u;
      if (task == "green") {
        const HalfSpacePoint y = pole.empty() ? HalfSpacePoint(std::vector<double>(params.d - 1, 0.0), 0.5 * b)
                                              : parse_point(pole, params.d);
        u = green_column(*A, g.locate(y));
      } else if (task == "potential") {
        u = killed_potential(*A, gamma);
      } else if (task == "harmonic") {
        u = harmonic_extension(*A, ExteriorData::uniform(1.0));
      } else {
        u = exit_probability(*A, default_exit_target(params.d, a, b));
      }
      std::ostringstream csv;
      csv << "cell";
      for (int k = 1; k < params.d; ++k) csv << ",x_tilde" << k;
      csv << ",x_d,value\n";
      for (int i = 0; i < g.size(); ++i) {
        const auto c = g.center(i);
        csv << i;
        for (double t : c.tilde) csv << ',' << fmt17(t);
        csv << ',' << fmt17(c.xd) << ',' << fmt17(u[i]) << '\n';
      }
      write_text(out, csv.str());
      std::cout << json{{"cells", g.size()}, {"relative_residual", A->last_relative_residual()}}.dump() << "\n";
    } else if (*mc) {
      const auto params = load_params(params_path);
      const auto [a, b] = parse_pair(domain_text, "domain");
      const BoxRegion dom(std::vector<double>(params.d - 1, 0.0), a, b);
      SimConfig cfg = make_sim_config(params, dom, paths, seed);
      cfg.threads = threads;
      const auto x0 = parse_point(x0_text, params.d);
      const auto e = task == "potential" ? estimate_killed_potential(cfg, x0, gamma)
                                         : estimate_exit_distribution(cfg, x0, default_exit_target(params.d, a, b));
      std::cout << json{{"mean", e.mean}, {"std_error", e.std_error}, {"n_effective", e.n_effective}}.dump() << "\n";
    } else if (*report) {
      auto cfgs = load_run_configs(config);
      const std::filesystem::path out_path(out);
      const auto stem = (out_path.parent_path() / out_path.stem()).string();
      json all = json::array();
      bool all_pass = true;
      for (std::size_t k = 0; k < cfgs.size(); ++k) {
        auto& cfg = cfgs[k];
        if (report_threads) cfg.threads = *report_threads;
        const auto rep = run_suite(cfg);
        const std::string csv = cfg.csv_out.empty() ? stem + "_" + std::to_string(k) + "_" + cfg.suite + ".csv" : cfg.csv_out;
        emit_report(rep, csv, "");
        all.push_back(rep);
        all_pass = all_pass && rep.verdict;
        std::cout << cfg.suite << ": " << (rep.verdict ? "pass" : "fail") << " (" << csv << ")\n";
      }
      write_text(out, json{{"reports", all}, {"verdict", all_pass ? "pass" : "fail"}}.dump(2) + "\n");
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
