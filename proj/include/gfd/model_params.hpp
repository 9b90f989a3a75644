#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfd/error.hpp"

namespace gfd {

/// Parameters of the jump kernel, the boundary exponent and the dimension.
/// Instances returned by validate_params() satisfy every admissibility
/// inequality; all other components assume that.
struct ModelParams {
  int d = 2;
  double alpha = 1.0;
  std::array<double, 4> beta{0.0, 0.0, 0.0, 0.0};
  double p = 0.5;

  double beta1() const { return beta[0]; }
  double beta2() const { return beta[1]; }
  double beta3() const { return beta[2]; }
  double beta4() const { return beta[3]; }

  /// (alpha-1)_+, the open lower end of the admissible p range.
  double p_lower() const { return alpha > 1.0 ? alpha - 1.0 : 0.0; }
  /// alpha+beta1, the open upper end of the admissible p range.
  double p_upper() const { return alpha + beta[0]; }

  bool operator==(const ModelParams&) const = default;
};

ModelParams validate_params(const ModelParams& raw);

/// Point (x~, x_d) of the upper half-space.
struct HalfSpacePoint {
  std::vector<double> tilde;
  double xd = 1.0;

  HalfSpacePoint() = default;
  HalfSpacePoint(std::vector<double> lateral, double height);

  int dim() const { return static_cast<int>(tilde.size()) + 1; }
  bool operator==(const HalfSpacePoint&) const = default;
};

/// x + (z~, 0)
HalfSpacePoint translate_lateral(const HalfSpacePoint& x, const std::vector<double>& shift);
HalfSpacePoint scale_point(const HalfSpacePoint& x, double r);
double distance(const HalfSpacePoint& x, const HalfSpacePoint& y);
double lateral_distance(const HalfSpacePoint& x, const HalfSpacePoint& y);

/// D_w(a,b) = { |x~ - w~| < a, 0 < x_d < b }, the lateral norm being Euclidean.
struct BoxRegion {
  std::vector<double> center_tilde;
  double half_width = 1.0;
  double height = 1.0;

  BoxRegion() = default;
  BoxRegion(std::vector<double> center, double a, double b);

  int dim() const { return static_cast<int>(center_tilde.size()) + 1; }
  bool contains(const HalfSpacePoint& x) const;
  bool operator==(const BoxRegion&) const = default;
};

enum class RegimeTag { PolyPoly, CriticalLog, Anomalous };

const char* to_string(RegimeTag tag);

struct EstimateRegime {
  RegimeTag tag = RegimeTag::PolyPoly;
  double a_p = 0.0;
};

inline constexpr double kDefaultRegimeTol = 1e-12;

/// a_p = 2(p - alpha - (beta1 + min(beta1, beta2))/2)
double regime_exponent(const ModelParams& params);

/// CriticalLog is reported when |a_p| <= tol; a_p is returned unrounded.
EstimateRegime classify_regime(const ModelParams& params, double tol = kDefaultRegimeTol);

void to_json(nlohmann::json& j, const ModelParams& params);
/// Parses {"d","alpha","beta":[4],"p"} and validates.
void from_json(const nlohmann::json& j, ModelParams& params);

ModelParams load_params(const std::string& path);
/// "0,0.01" -> point with lateral part {0} and height 0.01.
HalfSpacePoint parse_point(const std::string& text, int d);

}  // namespace gfd
