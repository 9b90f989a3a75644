#include "gfd/model_params.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gfd {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kPOutOfRange: return "p_out_of_range";
    case ErrorCode::kDimensionTooSmall: return "dimension_too_small";
    case ErrorCode::kLogWithoutPower: return "log_exponent_without_power_exponent";
    case ErrorCode::kBadAlpha: return "alpha_out_of_range";
    case ErrorCode::kNegativeBeta: return "negative_beta";
    case ErrorCode::kNonPositiveCoordinate: return "non_positive_coordinate";
    case ErrorCode::kNonPositiveScale: return "non_positive_scale";
    case ErrorCode::kCoincidentPoints: return "coincident_points";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kDegenerateRegion: return "degenerate_region";
    case ErrorCode::kPrecondition: return "precondition_violated";
    case ErrorCode::kQuadratureFailure: return "quadrature_failure";
    case ErrorCode::kSolverFailure: return "solver_failure";
    case ErrorCode::kBudgetExceeded: return "budget_exceeded";
    case ErrorCode::kEmptySuite: return "empty_suite";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kParse: return "parse_error";
  }
  return "unknown";
}

ModelParams validate_params(const ModelParams& raw) {
  const auto fail = [](ErrorCode code, const std::string& msg) { throw Error(code, msg); };
  if (raw.d < 1) fail(ErrorCode::kDimensionTooSmall, "d must be >= 1");
  if (!(raw.alpha > 0.0 && raw.alpha < 2.0)) fail(ErrorCode::kBadAlpha, "alpha must lie in (0,2)");
  for (double b : raw.beta) {
    if (!(b >= 0.0) || !std::isfinite(b)) fail(ErrorCode::kNegativeBeta, "beta_i must be finite and >= 0");
  }
  if (raw.beta[2] > 0.0 && !(raw.beta[0] > 0.0))
    fail(ErrorCode::kLogWithoutPower, "beta3 > 0 requires beta1 > 0");
  if (raw.beta[3] > 0.0 && !(raw.beta[1] > 0.0))
    fail(ErrorCode::kLogWithoutPower, "beta4 > 0 requires beta2 > 0");
  const double threshold = std::min(raw.alpha + raw.beta[0] + raw.beta[1], 2.0);
  if (!(static_cast<double>(raw.d) > threshold)) {
    std::ostringstream os;
    os << "d=" << raw.d << " must exceed min(alpha+beta1+beta2, 2)=" << threshold;
    fail(ErrorCode::kDimensionTooSmall, os.str());
  }
  if (!(raw.p > raw.p_lower() && raw.p < raw.p_upper())) {
    std::ostringstream os;
    os << "p=" << raw.p << " outside ((alpha-1)_+, alpha+beta1) = (" << raw.p_lower() << ", "
       << raw.p_upper() << ")";
    fail(ErrorCode::kPOutOfRange, os.str());
  }
  return raw;
}

HalfSpacePoint::HalfSpacePoint(std::vector<double> lateral, double height)
    : tilde(std::move(lateral)), xd(height) {
  if (!(xd > 0.0)) throw Error(ErrorCode::kNonPositiveCoordinate, "x_d must be > 0");
}

HalfSpacePoint translate_lateral(const HalfSpacePoint& x, const std::vector<double>& shift) {
  if (shift.size() != x.tilde.size()) throw Error(ErrorCode::kDimensionMismatch, "lateral shift size");
  HalfSpacePoint out = x;
  for (std::size_t k = 0; k < shift.size(); ++k) out.tilde[k] += shift[k];
  return out;
}

HalfSpacePoint scale_point(const HalfSpacePoint& x, double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::kNonPositiveScale, "scale factor must be > 0");
  HalfSpacePoint out = x;
  for (double& t : out.tilde) t *= r;
  out.xd *= r;
  return out;
}

double lateral_distance(const HalfSpacePoint& x, const HalfSpacePoint& y) {
  if (x.tilde.size() != y.tilde.size()) throw Error(ErrorCode::kDimensionMismatch, "point dimensions differ");
  double s = 0.0;
  for (std::size_t k = 0; k < x.tilde.size(); ++k) {
    const double t = x.tilde[k] - y.tilde[k];
    s += t * t;
  }
  return std::sqrt(s);
}

double distance(const HalfSpacePoint& x, const HalfSpacePoint& y) {
  const double lat = lateral_distance(x, y);
  return std::hypot(lat, x.xd - y.xd);
}

BoxRegion::BoxRegion(std::vector<double> center, double a, double b)
    : center_tilde(std::move(center)), half_width(a), height(b) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorCode::kDegenerateRegion, "box needs a > 0 and b > 0");
}

bool BoxRegion::contains(const HalfSpacePoint& x) const {
  if (x.tilde.size() != center_tilde.size()) return false;
  double s = 0.0;
  for (std::size_t k = 0; k < center_tilde.size(); ++k) {
    const double t = x.tilde[k] - center_tilde[k];
    s += t * t;
  }
  return std::sqrt(s) < half_width && x.xd > 0.0 && x.xd < height;
}

const char* to_string(RegimeTag tag) {
  switch (tag) {
    case RegimeTag::PolyPoly: return "PolyPoly";
    case RegimeTag::CriticalLog: return "CriticalLog";
    case RegimeTag::Anomalous: return "Anomalous";
  }
  return "unknown";
}

double regime_exponent(const ModelParams& params) {
  const double b1 = params.beta[0];
  const double b2 = params.beta[1];
  return 2.0 * (params.p - params.alpha - 0.5 * (b1 + std::min(b1, b2)));
}

EstimateRegime classify_regime(const ModelParams& params, double tol) {
  EstimateRegime out;
  out.a_p = regime_exponent(params);
  if (std::abs(out.a_p) <= tol) {
    // a_p = 0 with beta1 <= beta2 is p = alpha + beta1, outside the admissible range.
    out.tag = params.beta[1] < params.beta[0] ? RegimeTag::CriticalLog : RegimeTag::PolyPoly;
  } else if (out.a_p < 0.0) {
    out.tag = RegimeTag::PolyPoly;
  } else {
    out.tag = RegimeTag::Anomalous;
  }
  return out;
}

void to_json(nlohmann::json& j, const ModelParams& params) {
  j = nlohmann::json{{"d", params.d},
                     {"alpha", params.alpha},
                     {"beta", {params.beta[0], params.beta[1], params.beta[2], params.beta[3]}},
                     {"p", params.p}};
}

void from_json(const nlohmann::json& j, ModelParams& params) {
  ModelParams raw;
  try {
    raw.d = j.at("d").get<int>();
    raw.alpha = j.at("alpha").get<double>();
    const auto& b = j.at("beta");
    if (!b.is_array() || b.size() != 4) throw Error(ErrorCode::kParse, "\"beta\" must be an array of 4 numbers");
    for (std::size_t k = 0; k < 4; ++k) raw.beta[k] = b[k].get<double>();
    raw.p = j.at("p").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad params JSON: ") + e.what());
  }
  params = validate_params(raw);
}

ModelParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
  return j.get<ModelParams>();
}

HalfSpacePoint parse_point(const std::string& text, int d) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "bad coordinate '" + item + "' in \"" + text + "\"");
    }
  }
  if (static_cast<int>(values.size()) != d)
    throw Error(ErrorCode::kDimensionMismatch, "point \"" + text + "\" needs " + std::to_string(d) + " coordinates");
  const double xd = values.back();
  values.pop_back();
  return HalfSpacePoint(std::move(values), xd);
}

}  // namespace gfd
