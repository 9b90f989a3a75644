#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gfd/error.hpp"
#include "gfd/harness.hpp"

namespace gfd {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Quotes a CSV field only when needed.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

}  // namespace

void finalize_report(ComparabilityReport& r) {
  r.band_min = 0.0;
  r.band_max = 0.0;
  bool first = true;
  for (const auto& row : r.ratios) {
    if (!(row.ratio > 0.0) || !std::isfinite(row.ratio)) continue;
    if (first) {
      r.band_min = r.band_max = row.ratio;
      first = false;
    } else {
      r.band_min = std::min(r.band_min, row.ratio);
      r.band_max = std::max(r.band_max, row.ratio);
    }
  }
  bool ok = !r.ratios.empty() || !r.slopes.empty() || !r.checks.empty();
  if (r.band_limit > 0.0) ok = ok && !first && r.band_max <= r.band_limit * r.band_min;
  for (const auto& s : r.slopes) ok = ok && s.pass;
  for (const auto& c : r.checks) ok = ok && c.pass;
  r.verdict = ok;
}

void to_json(nlohmann::json& j, const ComparabilityReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.ratios) {
    nlohmann::json in = nlohmann::json::array();
    for (const auto& [k, v] : row.inputs) in.push_back({k, v});
    rows.push_back({{"case", row.label},
                    {"inputs", in},
                    {"numeric", row.numeric},
                    {"rhs", row.closed_form},
                    {"ratio", row.ratio}});
  }
  nlohmann::json slopes = nlohmann::json::array();
  for (const auto& s : r.slopes) {
    slopes.push_back({{"variable", s.variable},
                      {"predicted", s.predicted},
                      {"fitted", s.fitted},
                      {"stderr", s.stderr_},
                      {"tolerance", s.tolerance},
                      {"pass", s.pass}});
  }
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"threshold", c.threshold},
                      {"at_least", c.at_least},
                      {"pass", c.pass}});
  }
  j = nlohmann::json{{"suite", r.suite},
                     {"anchors", r.anchors},
                     {"band", {{"min", r.band_min}, {"max", r.band_max}, {"limit", r.band_limit}}},
                     {"slopes", slopes},
                     {"checks", checks},
                     {"verdict", r.verdict ? "pass" : "fail"},
                     {"ratios", rows}};
}

void from_json(const nlohmann::json& j, ComparabilityReport& r) {
  try {
    r = ComparabilityReport{};
    r.suite = j.at("suite").get<std::string>();
    r.anchors = j.at("anchors").get<std::vector<std::string>>();
    r.band_min = j.at("band").at("min").get<double>();
    r.band_max = j.at("band").at("max").get<double>();
    r.band_limit = j.at("band").at("limit").get<double>();
    for (const auto& s : j.at("slopes")) {
      r.slopes.push_back({s.at("variable").get<std::string>(), s.at("predicted").get<double>(),
                          s.at("fitted").get<double>(), s.at("stderr").get<double>(),
                          s.at("tolerance").get<double>(), s.at("pass").get<bool>()});
    }
    for (const auto& c : j.at("checks")) {
      r.checks.push_back({c.at("name").get<std::string>(), c.at("value").get<double>(),
                          c.at("threshold").get<double>(), c.at("at_least").get<bool>(), c.at("pass").get<bool>()});
    }
    r.verdict = j.at("verdict").get<std::string>() == "pass";
    for (const auto& row : j.at("ratios")) {
      RatioRow out;
      out.label = row.at("case").get<std::string>();
      for (const auto& kv : row.at("inputs")) out.inputs.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<double>());
      out.numeric = row.at("numeric").get<double>();
      out.closed_form = row.at("rhs").get<double>();
      out.ratio = row.at("ratio").get<double>();
      r.ratios.push_back(std::move(out));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad report JSON: ") + e.what());
  }
}

std::string report_csv(const ComparabilityReport& r) {
  // Input columns in order of first appearance; rows lacking one leave it empty.
  std::vector<std::string> names;
  for (const auto& row : r.ratios)
    for (const auto& kv : row.inputs)
      if (std::find(names.begin(), names.end(), kv.first) == names.end()) names.push_back(kv.first);

  std::ostringstream out;
  out << "case";
  for (const auto& n : names) out << ',' << csv_field(n);
  out << ",numeric,rhs,ratio\n";
  for (const auto& row : r.ratios) {
    out << csv_field(row.label);
    for (const auto& n : names) {
      out << ',';
      auto it = std::find_if(row.inputs.begin(), row.inputs.end(), [&](const auto& kv) { return kv.first == n; });
      if (it != row.inputs.end()) out << fmt17(it->second);
    }
    out << ',' << fmt17(row.numeric) << ',' << fmt17(row.closed_form) << ',' << fmt17(row.ratio) << '\n';
  }
  return out.str();
}

void emit_report(const ComparabilityReport& r, const std::string& csv_path, const std::string& json_path) {
  if (r.ratios.empty()) throw Error(ErrorCode::kEmptySuite, "empty suite");
  if (!csv_path.empty()) write_file(csv_path, report_csv(r));
  if (!json_path.empty()) write_file(json_path, nlohmann::json(r).dump(2) + "\n");
}

}  // namespace gfd
