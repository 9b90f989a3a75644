#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "gfd/closed_forms.hpp"
#include "gfd/error.hpp"
#include "gfd/harness.hpp"
#include "gfd/monte_carlo.hpp"
#include "gfd/parallel.hpp"
#include "gfd/quad_oracle.hpp"

namespace gfd {

using nlohmann::json;

void to_json(json& j, const SolverSettings& s) {
  j = json{{"lateral_n", s.lateral_n},   {"vertical_n", s.vertical_n}, {"grading", s.grading},
           {"half_width", s.half_width}, {"height", s.height},         {"pv_radius_cells", s.pv_radius_cells}};
}

void from_json(const json& j, SolverSettings& s) {
  SolverSettings d;
  d.lateral_n = j.value("lateral_n", d.lateral_n);
  d.vertical_n = j.value("vertical_n", d.vertical_n);
  d.grading = j.value("grading", d.grading);
  d.half_width = j.value("half_width", d.half_width);
  d.height = j.value("height", d.height);
  d.pv_radius_cells = j.value("pv_radius_cells", d.pv_radius_cells);
  s = d;
}

void to_json(json& j, const Tolerances& t) {
  j = json{{"slope", t.slope},       {"slope_log", t.slope_log},       {"band", t.band},
           {"bhp_flat", t.bhp_flat}, {"significance", t.significance}, {"mc_sigma", t.mc_sigma},
           {"constant_band", t.constant_band}};
}

void from_json(const json& j, Tolerances& t) {
  Tolerances d;
  d.slope = j.value("slope", d.slope);
  d.slope_log = j.value("slope_log", d.slope_log);
  d.band = j.value("band", d.band);
  d.bhp_flat = j.value("bhp_flat", d.bhp_flat);
  d.significance = j.value("significance", d.significance);
  d.mc_sigma = j.value("mc_sigma", d.mc_sigma);
  d.constant_band = j.value("constant_band", d.constant_band);
  t = d;
}

namespace {

const char* const kSuites[] = {"green", "bhp", "potential", "lemma61", "cor62", "lemma63"};

ModelParams params_from(const json& j, const std::filesystem::path& base) {
  if (j.contains("params")) return j.at("params").get<ModelParams>();
  if (j.contains("params_file")) {
    std::filesystem::path p = j.at("params_file").get<std::string>();
    if (p.is_relative()) p = base / p;
    return load_params(p.string());
  }
  throw Error(ErrorCode::kParse, "run config needs \"params\" or \"params_file\"");
}

RunConfig parse_with_base(const json& j, const std::filesystem::path& base) {
  try {
    RunConfig c;
    c.suite = j.at("suite").get<std::string>();
    bool known = false;
    for (const char* s : kSuites) known = known || c.suite == s;
    if (!known) throw Error(ErrorCode::kParse, "unknown suite \"" + c.suite + "\"");
    c.params = params_from(j, base);
    if (j.contains("solver")) c.solver = j.at("solver").get<SolverSettings>();
    if (j.contains("tolerances")) c.tol = j.at("tolerances").get<Tolerances>();
    if (j.contains("sweep")) c.sweep = j.at("sweep");
    if (!c.sweep.is_object()) throw Error(ErrorCode::kParse, "\"sweep\" must be an object");
    c.threads = j.value("threads", 0);
    c.csv_out = j.value("csv", std::string());
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad run config: ") + e.what());
  }
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

SlopeRow slope_row(const std::string& var, double predicted, double fitted, double se, double tol) {
  return {var, predicted, fitted, se, tol, std::abs(fitted - predicted) <= tol};
}

CheckRow check_row(const std::string& name, double value, double threshold, bool at_least) {
  const bool pass = std::isfinite(value) && (at_least ? value >= threshold : value <= threshold);
  return {name, value, threshold, at_least, pass};
}

double band_of(const std::vector<double>& r) {
  double lo = r.at(0), hi = r.at(0);
  for (double v : r) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi / lo;
}

std::vector<std::pair<std::string, double>> point_inputs(const std::string& name, const HalfSpacePoint& x) {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t k = 0; k < x.tilde.size(); ++k) out.emplace_back(name + "_tilde" + std::to_string(k + 1), x.tilde[k]);
  out.emplace_back(name + "_d", x.xd);
  return out;
}

HalfSpacePoint point_from(const json& j, int d) {
  auto v = j.get<std::vector<double>>();
  if (static_cast<int>(v.size()) != d) throw Error(ErrorCode::kDimensionMismatch, "point needs d coordinates");
  const double xd = v.back();
  v.pop_back();
  return HalfSpacePoint(std::move(v), xd);
}

std::vector<Box> boxes_from(const json& j) {
  std::vector<Box> out;
  for (const auto& b : j) out.push_back(Box{b.at(0).get<std::vector<double>>(), b.at(1).get<std::vector<double>>()});
  return out;
}

std::pair<double, double> range_from(const json& sweep, const char* key, std::pair<double, double> def) {
  if (!sweep.contains(key)) return def;
  const auto v = sweep.at(key).get<std::vector<double>>();
  if (v.size() != 2 || !(v[0] > 0.0) || !(v[0] < v[1])) throw Error(ErrorCode::kParse, std::string(key) + " must be [lo, hi]");
  return {v[0], v[1]};
}

BoxRegion domain_of(const ModelParams& params, const SolverSettings& s) {
  return BoxRegion(std::vector<double>(params.d - 1, 0.0), s.half_width, s.height);
}

// Operators are shared between families with equal settings.
class OperatorCache {
 public:
  OperatorCache(const ModelParams& params, int threads) : params_(params), threads_(threads) {}

  std::shared_ptr<const AssembledOperator> get(const SolverSettings& s) {
    const std::string key = json(s).dump();
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto a = build_operator(params_, s, threads_);
    cache_.emplace(key, a);
    order_.emplace_back(key, s);
    return a;
  }

  const std::vector<std::pair<std::string, SolverSettings>>& built() const { return order_; }
  std::shared_ptr<const AssembledOperator> at(const std::string& key) const { return cache_.at(key); }

 private:
  ModelParams params_;
  int threads_;
  std::map<std::string, std::shared_ptr<const AssembledOperator>> cache_;
  std::vector<std::pair<std::string, SolverSettings>> order_;
};

SolverSettings merged_settings(const SolverSettings& base, const json& fam) {
  if (!fam.contains("solver")) return base;
  json j = base;
  j.update(fam.at("solver"));
  return j.get<SolverSettings>();
}

std::string settings_tag(const SolverSettings& s) {
  return std::to_string(s.lateral_n) + "x" + std::to_string(s.vertical_n) + " grading " + fmt(s.grading);
}

// (height, value) on the vertical line through the lateral cell nearest to tilde.
std::vector<std::pair<double, double>> line_profile(const GridFunction& u, const std::vector<double>& tilde, double lo,
                                                    double hi, int skip_cell = -1) {
  const Grid& g = *u.grid;
  std::vector<std::pair<double, double>> out;
  const auto line = g.vertical_line(tilde);
  for (int r = 0; r < g.vertical_n; ++r) {
    const double z = g.z_center[r];
    if (z < lo || z > hi || line[r] == skip_cell) continue;
    out.emplace_back(z, u[line[r]]);
  }
  if (out.size() < 3) throw Error(ErrorCode::kPrecondition, "fewer than three grid rows inside the fit range");
  return out;
}

void add_fit(ComparabilityReport& rep, const std::string& var, const std::vector<std::pair<double, double>>& s,
             double predicted, double tol) {
  const auto f = fit_loglog_slope(s);
  rep.slopes.push_back(slope_row(var, predicted, f.slope, f.slope_stderr, tol));
}

}  // namespace

RunConfig parse_run_config(const json& j) { return parse_with_base(j, std::filesystem::current_path()); }

std::vector<RunConfig> load_run_configs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
  const auto base = std::filesystem::absolute(path).parent_path();
  std::vector<RunConfig> out;
  if (!j.contains("suites")) {
    out.push_back(parse_with_base(j, base));
    return out;
  }
  json shared = j;
  shared.erase("suites");
  for (const auto& s : j.at("suites")) {
    json merged = shared;
    merged.update(s);
    out.push_back(parse_with_base(merged, base));
  }
  if (out.empty()) throw Error(ErrorCode::kEmptySuite, "empty suite list");
  return out;
}

std::shared_ptr<const AssembledOperator> build_operator(const ModelParams& params, const SolverSettings& s,
                                                        int threads) {
  auto grid = std::make_shared<const Grid>(build_grid(domain_of(params, s), s.lateral_n, s.vertical_n, s.grading));
  AssemblyOptions opt;
  opt.pv_radius_cells = s.pv_radius_cells;
  opt.threads = threads;
  return std::make_shared<const AssembledOperator>(grid, params, normalizing_constant(params), opt);
}

std::vector<std::pair<double, double>> vertical_profile(const GridFunction& u, double lo, double hi) {
  return line_profile(u, std::vector<double>(u.grid->d - 1, 0.0), lo, hi);
}

// ---------------------------------------------------------------------------

ComparabilityReport run_green_suite(const RunConfig& cfg) {
  const ModelParams& P = cfg.params;
  const int d = P.d;
  ComparabilityReport rep;
  rep.suite = "green";
  rep.anchors = {"G(x,y) is comparable to |x-y|^{alpha-d} for interior pairs",
                 "G(x,y) carries the boundary factor (x_d/|x-y| ^ 1)^p",
                 "in the anomalous regime the larger height enters with exponent 2alpha-p+beta1+beta2",
                 "exit probabilities through a far target decay like (x_d/r)^p"};
  rep.band_limit = cfg.sweep.value("band_limit", cfg.tol.band);
  OperatorCache cache(P, cfg.threads);

  json families = cfg.sweep.value("families", json::array());
  if (families.empty()) {
    families = json::array({json{{"kind", "interior"}}, json{{"kind", "boundary"}}, json{{"kind", "exit"}}});
  }
  const std::vector<double> origin(d - 1, 0.0);

  for (const auto& fam : families) {
    const std::string kind = fam.at("kind").get<std::string>();
    const SolverSettings s = merged_settings(cfg.solver, fam);
    const auto A = cache.get(s);
    const Grid& g = A->grid();
    const std::string tag = kind + " [" + settings_tag(s) + "]";

    if (kind == "interior") {
      const HalfSpacePoint x0 = fam.contains("x") ? point_from(fam.at("x"), d) : HalfSpacePoint(origin, 0.5 * s.height);
      const auto cells = fam.value("cells", std::vector<int>{1, 6});
      const int xi = g.locate(x0);
      const auto xc = g.center(xi);
      const auto G = green_column(*A, xi);
      const int col = g.column(xi);
      const int c1 = g.lateral_index(col, 0), c2 = d == 3 ? g.lateral_index(col, 1) : 0;
      std::vector<std::pair<double, double>> samples;
      for (int k = cells.at(0); k <= cells.at(1) && c1 + k < g.lateral_n; ++k) {
        const int j = g.index(c1 + k, c2, g.row(xi));
        const auto yc = g.center(j);
        RatioRow row{"interior", point_inputs("x", xc), G[j], green_estimate(xc, yc, P).value, 0.0};
        for (auto& kv : point_inputs("y", yc)) row.inputs.push_back(kv);
        row.ratio = row.numeric / row.closed_form;
        rep.ratios.push_back(row);
        samples.emplace_back(distance(xc, yc), G[j]);
      }
      add_fit(rep, "rho " + tag, samples, P.alpha - d, cfg.tol.slope_log);
    } else if (kind == "boundary") {
      const HalfSpacePoint y0 = fam.contains("y") ? point_from(fam.at("y"), d) : HalfSpacePoint(origin, 0.5 * s.height);
      const auto [lo, hi] = range_from(fam, "range", {1e-4, 1e-2});
      const int yi = g.locate(y0);
      const auto yc = g.center(yi);
      const auto G = green_column(*A, yi);
      const auto prof = line_profile(G, yc.tilde, lo, hi, yi);
      for (const auto& [z, v] : prof) {
        const HalfSpacePoint xc(yc.tilde, z);
        RatioRow row{"boundary", point_inputs("x", xc), v, green_estimate(xc, yc, P).value, 0.0};
        for (auto& kv : point_inputs("y", yc)) row.inputs.push_back(kv);
        row.ratio = row.numeric / row.closed_form;
        rep.ratios.push_back(row);
      }
      add_fit(rep, "x_d " + tag, prof, P.p, cfg.tol.slope);
    } else if (kind == "exit") {
      std::vector<Box> target;
      if (fam.contains("target")) {
        target = boxes_from(fam.at("target"));
      } else {
        Box b;
        for (int k = 0; k < d - 1; ++k) {
          b.lo.push_back(-s.half_width);
          b.hi.push_back(s.half_width);
        }
        b.lo.push_back(3.0 * s.height);
        b.hi.push_back(4.0 * s.height);
        target.push_back(b);
      }
      const double r = fam.value("r", 4.0 * s.height);
      const auto [lo, hi] = range_from(fam, "range", {1e-4, 1e-2});
      const auto u = exit_probability(*A, target);
      const auto prof = line_profile(u, origin, lo, hi);
      for (const auto& [z, v] : prof) {
        RatioRow row{"exit", point_inputs("x", HalfSpacePoint(origin, z)), v, exit_prob_shape(z, r, P), 0.0};
        row.ratio = row.numeric / row.closed_form;
        rep.ratios.push_back(row);
      }
      add_fit(rep, "x_d " + tag, prof, P.p, cfg.tol.slope);
    } else if (kind == "two_point") {
      const HalfSpacePoint x0 = point_from(fam.at("x"), d);
      const auto y_tilde = fam.at("y_tilde").get<std::vector<double>>();
      if (static_cast<int>(y_tilde.size()) != d - 1) throw Error(ErrorCode::kDimensionMismatch, "y_tilde needs d-1 entries");
      const int xi = g.locate(x0);
      const auto xc = g.center(xi);
      const auto [lo, hi] = range_from(fam, "M_range", {2.0 * xc.xd, 0.05});
      const auto G = green_column(*A, xi);
      const auto prof = line_profile(G, y_tilde, lo, hi);
      const auto col = g.column(g.vertical_line(y_tilde).front());
      std::vector<double> yt;
      for (int k = 0; k < d - 1; ++k) yt.push_back(g.lateral_center(col, k));
      GreenEstimate first;
      for (std::size_t k = 0; k < prof.size(); ++k) {
        const HalfSpacePoint yc(yt, prof[k].first);
        const auto est = green_estimate(xc, yc, P);
        if (k == 0) first = est;
        RatioRow row{"two_point", point_inputs("x", xc), prof[k].second, est.value, 0.0};
        for (auto& kv : point_inputs("y", yc)) row.inputs.push_back(kv);
        row.ratio = row.numeric / row.closed_form;
        rep.ratios.push_back(row);
      }
      const double tol = first.regime.tag == RegimeTag::PolyPoly ? cfg.tol.slope : cfg.tol.slope_log;
      const auto f = fit_loglog_slope(prof);
      rep.slopes.push_back(slope_row("M " + tag, first.factors.max_exponent, f.slope, f.slope_stderr, tol));
      if (first.regime.tag == RegimeTag::Anomalous) {
        rep.checks.push_back(check_row("M exponent distance from p in stderr units " + tag,
                                       std::abs(f.slope - P.p) / f.slope_stderr, cfg.tol.significance, true));
      }
    } else {
      throw Error(ErrorCode::kParse, "unknown green family \"" + kind + "\"");
    }
  }

  const double gk_limit = cfg.sweep.value("gkappa_limit", 1.05);
  for (const auto& [key, s] : cache.built()) {
    const auto A = cache.at(key);
    const auto u = A->solve(A->kappa());
    double mx = 0.0;
    for (double v : u) mx = std::max(mx, v);
    rep.checks.push_back(check_row("max G kappa [" + settings_tag(s) + "]", mx, gk_limit, false));
  }
  finalize_report(rep);
  return rep;
}

// ---------------------------------------------------------------------------

ComparabilityReport run_bhp_suite(const RunConfig& cfg) {
  const ModelParams& P = cfg.params;
  const int d = P.d;
  const double b1 = P.beta1(), b2 = P.beta2();
  const bool holds = P.p < P.alpha + std::min(b1, b2);
  const bool fails = b2 < b1 && P.beta4() == 0.0 && P.p >= P.alpha + b2 && P.p < P.alpha + b1;
  if (!holds && !fails)
    throw Error(ErrorCode::kPrecondition, "parameters lie outside both decided boundary Harnack regimes");
  if (!(b1 < 1.0)) throw Error(ErrorCode::kPrecondition, "the witness weight y_d^{-beta1} needs beta1 < 1");

  ComparabilityReport rep;
  rep.suite = "bhp";
  rep.anchors = {holds ? "f(x)/x_d^p <= C f(y)/y_d^p for nonnegative harmonic f vanishing near the boundary"
                       : "the boundary Harnack principle fails: f(x) behaves like x_d^p log(r0/x_d)"};
  rep.band_limit = 0.0;

  const SolverSettings& s = cfg.solver;
  const auto A = build_operator(P, s, cfg.threads);
  const double dist = cfg.sweep.value("witness_distance", 4.0);
  const double sz = cfg.sweep.value("witness_size", 1e-7);
  const auto [lo, hi] = range_from(cfg.sweep, "range", {1e-4, 1e-2});
  if (!(dist - sz > s.half_width)) throw Error(ErrorCode::kPrecondition, "witness must lie outside the domain");

  // Unit mass of y_d^{-beta1} spread over a tiny box at the boundary point z0.
  Box support;
  support.lo = {dist - sz};
  support.hi = {dist + sz};
  for (int k = 1; k < d - 1; ++k) {
    support.lo.push_back(-sz);
    support.hi.push_back(sz);
  }
  support.lo.push_back(0.0);
  support.hi.push_back(sz);
  const double mass = std::pow(2.0 * sz, d - 1) * std::pow(sz, 1.0 - b1) / (1.0 - b1);
  ExteriorData ed;
  ed.g = [b1, mass](const HalfSpacePoint& y) { return std::pow(y.xd, -b1) / mass; };
  ed.support = {support};
  ed.boundary_exponent = -b1;

  const auto u = harmonic_extension(*A, ed);
  const auto prof = vertical_profile(u, lo, hi);
  const double r0 = s.height;
  std::vector<double> lx, ratio;
  for (const auto& [z, v] : prof) {
    const double rhs = holds ? std::pow(z, P.p) : std::pow(z, P.p) * std::log(r0 / z);
    rep.ratios.push_back({"witness", {{"x_d", z}}, v, rhs, v / rhs});
    lx.push_back(std::log(1.0 / z));
    ratio.push_back(v / std::pow(z, P.p));
  }
  const auto fit = linear_fit(lx, ratio);
  double mean = 0.0;
  for (double v : ratio) mean += v;
  mean /= static_cast<double>(ratio.size());

  if (holds) {
    rep.checks.push_back(check_row("|d r / d log(1/x_d)| / mean r", std::abs(fit.slope) / mean, cfg.tol.bhp_flat, false));
    if (cfg.sweep.value("constant_data", true)) {
      const auto u1 = harmonic_extension(*A, ExteriorData::uniform(1.0));
      std::vector<double> r1;
      for (const auto& [z, v] : vertical_profile(u1, lo, hi)) {
        rep.ratios.push_back({"constant", {{"x_d", z}}, v, std::pow(z, P.p), v / std::pow(z, P.p)});
        r1.push_back(v / std::pow(z, P.p));
      }
      rep.checks.push_back(check_row("constant data ratio band max/min", band_of(r1), cfg.tol.constant_band, false));
    }
  } else {
    rep.checks.push_back(
        check_row("log coefficient c / stderr", fit.slope / fit.slope_stderr, cfg.tol.significance, true));
  }
  finalize_report(rep);
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

void add_cross_check(ComparabilityReport& rep, const RunConfig& cfg) {
  const json& cc = cfg.sweep.at("cross_check");
  const ModelParams P = cc.contains("params") ? cc.at("params").get<ModelParams>() : cfg.params;
  const SolverSettings s = merged_settings(cfg.solver, cc);
  const long paths = cc.value("paths", 100000L);
  const auto seed = cc.value("seed", std::uint64_t{1});
  const double gamma = cc.value("gamma", 0.0);
  json pts = cc.value("points", json::array());
  if (pts.empty()) {
    pts = json::array({std::vector<double>{0.0, 0.5}, std::vector<double>{0.0, 0.2}, std::vector<double>{0.45, 0.5}});
  }

  const auto A = build_operator(P, s, cfg.threads);
  const auto u = killed_potential(*A, gamma);
  SimConfig sim = make_sim_config(P, domain_of(P, s), paths, seed);
  sim.threads = cfg.threads;
  for (const auto& pj : pts) {
    const int i = A->grid().locate(point_from(pj, P.d));
    const auto c = A->grid().center(i);
    const auto e = estimate_killed_potential(sim, c, gamma);
    const double z = (e.mean - u[i]) / e.std_error;
    std::string name = "Monte Carlo vs solver |z| at (";
    for (double t : c.tilde) name += fmt(t) + ",";
    name += fmt(c.xd) + ")";
    rep.checks.push_back(check_row(name, std::abs(z), cfg.tol.mc_sigma, false));
  }
}

void add_divergence_witness(ComparabilityReport& rep, const RunConfig& cfg) {
  const ModelParams& P = cfg.params;
  const json dv = cfg.sweep.value("divergence", json::object());
  const double gamma = dv.value("gamma", -P.p - 1.5);
  if (!(gamma <= -P.p - 1.0)) throw Error(ErrorCode::kPrecondition, "divergence witness needs gamma <= -p-1");
  const auto levels = dv.value("vertical_n", std::vector<int>{16, 24, 32});
  SolverSettings s = cfg.solver;
  s.lateral_n = dv.value("lateral_n", 16);
  s.grading = dv.value("grading", 1.3);
  const HalfSpacePoint x0 = dv.contains("x") ? point_from(dv.at("x"), P.d)
                                             : HalfSpacePoint(std::vector<double>(P.d - 1, 0.0), 0.5 * s.height);
  std::vector<double> values;
  for (int n : levels) {
    s.vertical_n = n;
    const auto A = build_operator(P, s, cfg.threads);
    values.push_back(killed_potential(*A, gamma)[A->grid().locate(x0)]);
  }
  double growth = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < values.size(); ++k) growth = std::min(growth, values[k] / values[k - 1]);
  rep.checks.push_back(check_row("gamma=" + fmt(gamma) + " smallest growth factor under boundary refinement", growth,
                                 dv.value("min_growth", 1.5), true));
}

}  // namespace

ComparabilityReport run_potential_suite(const RunConfig& cfg) {
  const ModelParams& P = cfg.params;
  ComparabilityReport rep;
  rep.suite = "potential";
  rep.anchors = {"E_x int_0^tau (Y_t^d)^gamma dt is comparable to x_d^p for gamma > p-alpha, "
                 "to x_d^p log(R/x_d) for gamma = p-alpha, to x_d^{alpha+gamma} for -p-1 < gamma < p-alpha, "
                 "and infinite for gamma <= -p-1"};
  rep.band_limit = cfg.sweep.value("band_limit", 0.0);
  const double crit = P.p - P.alpha;
  auto gammas = cfg.sweep.value("gammas", std::vector<double>{});
  if (gammas.empty()) gammas = {crit + 0.6, crit, std::max(crit - 0.4, 0.5 * (crit - P.p - 1.0))};
  const auto [lo, hi] = range_from(cfg.sweep, "range", {1e-4, 1e-2});
  const double R = cfg.solver.height;

  const auto A = build_operator(P, cfg.solver, cfg.threads);
  for (double gamma : gammas) {
    if (gamma <= -P.p - 1.0) throw Error(ErrorCode::kPrecondition, "finite-branch gammas must exceed -p-1");
    const auto u = killed_potential(*A, gamma);
    const auto prof = vertical_profile(u, lo, hi);
    const std::string label = "gamma=" + fmt(gamma);
    for (const auto& [z, v] : prof) {
      const double rhs = killed_potential_rhs(gamma, z, R, P, 1e-9).value;
      rep.ratios.push_back({label, {{"gamma", gamma}, {"x_d", z}}, v, rhs, v / rhs});
    }
    if (std::abs(gamma - crit) <= 1e-9) {
      const auto mc = compare_power_vs_log(prof, R);
      rep.checks.push_back(check_row(label + " rss(power)/rss(power x log)", mc.rss_power / mc.rss_log, 1.0, true));
      std::vector<double> lx, ly;
      for (const auto& [z, v] : prof) {
        lx.push_back(std::log(z));
        ly.push_back(std::log(v) - std::log(std::log(R / z)));
      }
      const auto f = linear_fit(lx, ly);
      rep.slopes.push_back(slope_row("x_d " + label + " (log model)", P.p, f.slope, f.slope_stderr, cfg.tol.slope));
    } else {
      add_fit(rep, "x_d " + label, prof, gamma > crit ? P.p : P.alpha + gamma, cfg.tol.slope);
    }
  }
  if (cfg.sweep.value("divergence_witness", true)) add_divergence_witness(rep, cfg);
  if (cfg.sweep.contains("cross_check")) add_cross_check(rep, cfg);
  finalize_report(rep);
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

struct IntegralJob {
  std::string label;
  std::vector<std::pair<std::string, double>> inputs;
  std::function<double()> numeric;
  std::function<double()> rhs;
};

std::vector<RatioRow> run_jobs(const std::vector<IntegralJob>& jobs, int threads) {
  std::vector<RatioRow> rows(jobs.size());
  parallel_for(static_cast<long>(jobs.size()), threads, [&](long k) {
    const auto& jb = jobs[k];
    const double num = jb.numeric(), rhs = jb.rhs();
    rows[k] = {jb.label, jb.inputs, num, rhs, num / rhs};
  });
  return rows;
}

std::vector<std::pair<std::string, double>> shape_inputs(const IntegralShape& s) {
  return {{"gamma", s.gamma}, {"beta", s.beta}, {"q", s.q}, {"delta", s.delta}, {"R", s.R}};
}

std::vector<double> dyadic(int from, int to) {
  std::vector<double> v;
  for (int k = from; k <= to; ++k) v.push_back(std::ldexp(1.0, -k));
  return v;
}

void band_checks(ComparabilityReport& rep, const std::vector<std::string>& labels, double limit) {
  for (const auto& l : labels) {
    std::vector<double> r;
    for (const auto& row : rep.ratios)
      if (row.label == l) r.push_back(row.ratio);
    if (!r.empty()) rep.checks.push_back(check_row(l + " band max/min", band_of(r), limit, false));
  }
}

ComparabilityReport lemma61_suite(const RunConfig& cfg, const OracleOptions& opt) {
  const ModelParams& P = cfg.params;
  const int d = P.d;
  const double alpha = P.alpha, q0 = std::max(alpha - 1.0, 0.0);
  ComparabilityReport rep;
  rep.suite = "lemma61";
  rep.anchors = {"I1 over D(R,a1) is comparable to x_d^{alpha-q-1} a1^{gamma+1} log(2R/a1)^beta",
                 "I2 over D(R,a2)\\D(R,a3) is comparable to R^{gamma+alpha-q} [F(a3/R) - F(a2/R)]",
                 "I3 over D(R,3x_d/2)\\D(R,x_d/2) is comparable to x_d^alpha log(2R/x_d)^beta"};
  const std::vector<IntegralShape> shapes = {{0.5, 0.0, q0 + 0.5, 0.0, 1.0},
                                             {-0.5, 1.0, q0 + 1.2, 0.5, 1.0},
                                             {0.0, 0.5, q0 + 0.3, 1.0, 1.0}};
  std::vector<IntegralJob> jobs;
  auto add = [&](const char* label, BoxCase c, IntegralShape s, double xd, double a1, double a2, double a3) {
    auto in = shape_inputs(s);
    in.insert(in.end(), {{"alpha", alpha}, {"x_d", xd}, {"a1", a1}, {"a2", a2}, {"a3", a3}});
    jobs.push_back({label, in, [=] { return lemma61_numeric(c, s, d, alpha, xd, a1, a2, a3, opt).value; },
                    [=] { return lemma61_rhs(c, s, alpha, xd, a1, a2, a3); }});
  };
  for (const auto& s : shapes) {
    for (double xd : {std::ldexp(1.0, -3), std::ldexp(1.0, -5), std::ldexp(1.0, -7)})
      for (double f : {2.0, 8.0, 32.0}) add("I1", BoxCase::I1, s, xd, xd / f, 0.0, 0.0);
    for (double xd : {std::ldexp(1.0, -4), std::ldexp(1.0, -6), std::ldexp(1.0, -8)}) {
      add("I2", BoxCase::I2, s, xd, 0.0, 1.0, 1.5 * xd);
      add("I2", BoxCase::I2, s, xd, 0.0, 0.5, 3.0 * xd);
      add("I2", BoxCase::I2, s, xd, 0.0, 6.0 * xd, 1.5 * xd);
    }
    for (double xd : {std::ldexp(1.0, -3), std::ldexp(1.0, -5), std::ldexp(1.0, -7)})
      for (double R : {1.0, 0.5, 2.0}) {
        IntegralShape sr = s;
        sr.R = R;
        add("I3", BoxCase::I3, sr, xd, 0.0, 0.0, 0.0);
      }
  }
  // I1 slope in x_d at a fixed small a1. The finite-R correction is of
  // relative size x_d^{q+1-alpha}, hence the larger q.
  const IntegralShape slope_shape{0.5, 0.0, q0 + 1.0, 0.0, 1.0};
  const double a1 = std::ldexp(1.0, -16);
  for (double xd : dyadic(4, 9)) add("I1 slope", BoxCase::I1, slope_shape, xd, a1, 0.0, 0.0);

  rep.ratios = run_jobs(jobs, cfg.threads);
  band_checks(rep, {"I1", "I2", "I3"}, cfg.tol.band);
  std::vector<std::pair<double, double>> s;
  for (const auto& row : rep.ratios)
    if (row.label == "I1 slope") s.emplace_back(row.inputs[6].second, row.numeric);
  add_fit(rep, "x_d (I1, a1 fixed)", s, alpha - slope_shape.q - 1.0, cfg.sweep.value("slope_tol", 0.05));
  return rep;
}

ComparabilityReport cor62_suite(const RunConfig& cfg, const OracleOptions& opt) {
  const ModelParams& P = cfg.params;
  const int d = P.d;
  const double alpha = P.alpha;
  const double gamma = cfg.sweep.value("gamma", 0.0);
  ComparabilityReport rep;
  rep.suite = "cor62";
  rep.anchors = {"the weighted box integral is comparable to x_d^q for q < alpha+gamma, "
                 "to x_d^q log(2R/x_d)^{beta+1} for q = alpha+gamma, "
                 "and to x_d^{alpha+gamma} log(2R/x_d)^beta for q > alpha+gamma"};
  const double t = alpha + gamma;
  const std::vector<std::pair<std::string, double>> branches = {
      {"branch 1", std::max(t - 0.5, 0.5 * (t + alpha - 1.0))}, {"branch 2", t}, {"branch 3", t + 0.6}};
  const auto xs = dyadic(5, 20);
  std::vector<IntegralJob> jobs;
  for (const auto& [label, q] : branches) {
    IntegralShape s{gamma, 0.0, q, 0.0, 1.0};
    for (double xd : xs) {
      auto in = shape_inputs(s);
      in.insert(in.end(), {{"alpha", alpha}, {"x_d", xd}});
      const double qq = q;
      jobs.push_back({label, in, [=] { return cor62_numeric(s, d, alpha, qq, xd, s.R, opt).value; },
                      [=] { return cor62_rhs(s, alpha, xd, qq, 1e-9); }});
    }
  }
  rep.ratios = run_jobs(jobs, cfg.threads);
  band_checks(rep, {"branch 1", "branch 2", "branch 3"}, cfg.tol.band);
  const double tol = cfg.sweep.value("slope_tol", 0.05);
  for (const auto& [label, q] : branches) {
    std::vector<std::pair<double, double>> s;
    for (const auto& row : rep.ratios)
      if (row.label == label) s.emplace_back(row.inputs[6].second, row.numeric);
    if (label == "branch 2") {
      const auto mc = compare_power_vs_log(s, 2.0);
      rep.checks.push_back(check_row("branch 2 rss(power)/rss(power x log)", mc.rss_power / mc.rss_log, 1.0, true));
    } else {
      add_fit(rep, "x_d " + label, s, label == "branch 1" ? q : t, tol);
    }
  }
  return rep;
}

ComparabilityReport lemma63_suite(const RunConfig& cfg, const OracleOptions& opt) {
  const ModelParams& P = cfg.params;
  const int d = P.d;
  ComparabilityReport rep;
  rep.suite = "lemma63";
  rep.anchors = {"for |x~-y~| > 4 and small heights the double kernel integral is at most C x_d^p y_d^p"};
  const double sep = cfg.sweep.value("separation", 5.0);
  const auto hs = dyadic(2, 6);
  std::vector<IntegralJob> jobs;
  std::vector<double> zero(d - 1, 0.0), far = zero;
  far[0] = sep;
  for (double xd : hs)
    for (double yd : hs) {
      const HalfSpacePoint x(zero, xd), y(far, yd);
      jobs.push_back({"double kernel",
                      {{"x_d", xd}, {"y_d", yd}, {"separation", sep}},
                      [=] {
                        return double_kernel_integral(P, x, y, BoxRegion(zero, 1.0, 1.0), BoxRegion(far, 1.0, 1.0),
                                                      {P.p, P.p}, opt)
                            .value;
                      },
                      [=] { return std::pow(xd, P.p) * std::pow(yd, P.p); }});
    }
  rep.ratios = run_jobs(jobs, cfg.threads);
  rep.band_limit = cfg.tol.band;
  return rep;
}

}  // namespace

ComparabilityReport run_integrals_suite(const RunConfig& cfg) {
  OracleOptions opt;
  // The double-kernel sweep is 25 nested integrals; 1e-4 keeps it under a minute.
  opt.rel_tol = cfg.sweep.value("rel_tol", cfg.suite == "lemma63" ? 1e-4 : 1e-6);
  ComparabilityReport rep;
  if (cfg.suite == "lemma61") {
    rep = lemma61_suite(cfg, opt);
  } else if (cfg.suite == "cor62") {
    rep = cor62_suite(cfg, opt);
  } else if (cfg.suite == "lemma63") {
    rep = lemma63_suite(cfg, opt);
  } else {
    throw Error(ErrorCode::kParse, "not an integrals suite: " + cfg.suite);
  }
  finalize_report(rep);
  return rep;
}

ComparabilityReport run_suite(const RunConfig& cfg) {
  if (cfg.suite == "green") return run_green_suite(cfg);
  if (cfg.suite == "bhp") return run_bhp_suite(cfg);
  if (cfg.suite == "potential") return run_potential_suite(cfg);
  return run_integrals_suite(cfg);
}

}  // namespace gfd
