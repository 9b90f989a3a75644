#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gfd/fitting.hpp"
#include "gfd/model_params.hpp"
#include "gfd/nonlocal_solver.hpp"

namespace gfd {

/// One sample of a comparability suite.
struct RatioRow {
  std::string label;                                   // case or family name
  std::vector<std::pair<std::string, double>> inputs;  // descriptor values, fixed order per suite
  double numeric = 0.0;
  double closed_form = 0.0;
  double ratio = 0.0;

  bool operator==(const RatioRow&) const = default;
};

struct SlopeRow {
  std::string variable;
  double predicted = 0.0;
  double fitted = 0.0;
  double stderr_ = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  bool operator==(const SlopeRow&) const = default;
};

/// A scalar criterion: pass when value <= threshold (or >= for kind "min").
struct CheckRow {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool at_least = false;
  bool pass = false;

  bool operator==(const CheckRow&) const = default;
};

struct ComparabilityReport {
  std::string suite;
  std::vector<std::string> anchors;  // the claims under test, in words
  std::vector<RatioRow> ratios;
  double band_min = 0.0;
  double band_max = 0.0;
  /// Ratio band limit max/min; 0 disables the band criterion.
  double band_limit = 0.0;
  std::vector<SlopeRow> slopes;
  std::vector<CheckRow> checks;
  bool verdict = false;

  bool operator==(const ComparabilityReport&) const = default;
};

/// Recomputes band and verdict from rows, slopes, checks and band_limit.
void finalize_report(ComparabilityReport& r);

void to_json(nlohmann::json& j, const ComparabilityReport& r);
void from_json(const nlohmann::json& j, ComparabilityReport& r);

/// Writes the ratio rows as CSV (17 significant digits) and the JSON summary.
/// Throws kEmptySuite for a report without rows, kIo on write failure.
void emit_report(const ComparabilityReport& r, const std::string& csv_path, const std::string& json_path);
/// CSV text of the ratio rows: label, inputs..., numeric, closed_form, ratio.
std::string report_csv(const ComparabilityReport& r);

/// Solver grid settings of a run.
struct SolverSettings {
  int lateral_n = 64;
  int vertical_n = 64;
  double grading = 1.15;
  double half_width = 1.0;
  double height = 1.0;
  int pv_radius_cells = 2;
};

void to_json(nlohmann::json& j, const SolverSettings& s);
void from_json(const nlohmann::json& j, SolverSettings& s);

struct Tolerances {
  double slope = 0.1;        // solver-backed exponents
  double slope_log = 0.15;   // exponents with log contamination
  double band = 20.0;        // max/min ratio band
  double bhp_flat = 0.05;    // |slope| / mean of the BHP ratio
  double significance = 3.0; // stderr multiples for "distinguishable"
  double mc_sigma = 3.0;     // MC vs solver agreement in std errors
  double constant_band = 1.5;
};

void to_json(nlohmann::json& j, const Tolerances& t);
void from_json(const nlohmann::json& j, Tolerances& t);

/// Parsed run configuration: one suite with its sweep description. The
/// sweep is kept as JSON since each suite has its own schema (see README).
struct RunConfig {
  std::string suite;  // green | bhp | potential | lemma61 | cor62 | lemma63
  ModelParams params;
  SolverSettings solver;
  Tolerances tol;
  nlohmann::json sweep = nlohmann::json::object();
  int threads = 0;
  std::string csv_out;
};

RunConfig parse_run_config(const nlohmann::json& j);
/// Either a single suite object or {"suites": [...]} sharing top-level keys.
std::vector<RunConfig> load_run_configs(const std::string& path);

std::shared_ptr<const AssembledOperator> build_operator(const ModelParams& params, const SolverSettings& s,
                                                        int threads);

ComparabilityReport run_green_suite(const RunConfig& cfg);
ComparabilityReport run_bhp_suite(const RunConfig& cfg);
ComparabilityReport run_potential_suite(const RunConfig& cfg);
/// lemma61, cor62 or lemma63 sweeps of the quadrature oracles against the
/// closed forms.
ComparabilityReport run_integrals_suite(const RunConfig& cfg);
ComparabilityReport run_suite(const RunConfig& cfg);

/// Values of a grid function on the vertical line through x~ = 0 with
/// heights inside [lo, hi], as (height, value) samples.
std::vector<std::pair<double, double>> vertical_profile(const GridFunction& u, double lo, double hi);

}  // namespace gfd
