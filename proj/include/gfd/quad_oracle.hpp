#pragma once

#include <functional>
#include <optional>

#include "gfd/closed_forms.hpp"
#include "gfd/model_params.hpp"
#include "gfd/quadrature.hpp"

namespace gfd {

using HalfSpaceField = std::function<double(const HalfSpacePoint&)>;

struct OracleOptions {
  double rel_tol = 1e-6;
  long max_evals = 20'000'000;
  /// Point singularity of the integrand, if any.
  std::optional<HalfSpacePoint> singular_point;
  /// Levels of geometric refinement towards x_d = 0 and the singular point.
  int grading_levels = 40;
  /// Known power y_d^e of the integrand at x_d = 0 (e > -1). When set, the
  /// height variable is substituted so that this power is flattened.
  std::optional<double> boundary_exponent;
};

/// Integral of f over the box, or over box \ hole when hole is given (the
/// hole must lie inside the box). d = 2 uses Cartesian coordinates, d = 3
/// cylindrical coordinates around the box axis. Nodes never touch x_d = 0.
QuadResult box_integral(const BoxRegion& box, const BoxRegion* hole, const HalfSpaceField& f,
                        const OracleOptions& opt = {});

/// Integral over the lateral ball |y~| < R and heights (lo, hi) of a function
/// depending on (|y~|, y_d) only. singular_height marks a point singularity
/// at (0~, singular_height).
QuadResult radial_integral(int d, double R, double lo, double hi, const std::function<double(double, double)>& g,
                           std::optional<double> singular_height, const OracleOptions& opt = {});

/// Numerical value of I1, I2 or I3 for x = (0~, x_d) in dimension d (2 or 3).
QuadResult lemma61_numeric(BoxCase c, const IntegralShape& shape, int d, double alpha, double xd, double a1,
                           double a2, double a3, const OracleOptions& opt = {});

/// int_{D(R,a)} (x_d/|x-y| ^ 1)^q f(y; gamma, beta, 0, delta, x) dy, x = (0~, x_d).
QuadResult cor62_numeric(const IntegralShape& shape, int d, double alpha, double q, double xd, double a,
                         const OracleOptions& opt = {});

struct WeightExponents {
  double px = 1.0;  // exponent of (x_d/|w-x| ^ 1)
  double py = 1.0;  // exponent of (y_d/|z-y| ^ 1)
};

/// Double integral over box_x x box_y of
///   (x_d/|w-x| ^ 1)^px |x-w|^{alpha-d} K(w_d, z_d) (y_d/|z-y| ^ 1)^py |y-z|^{alpha-d}
/// with K = (w_d ^ z_d)^b1 (w_d v z_d)^b2 log(1+(w_d v z_d)/(w_d ^ z_d))^b3 log(1+8/(w_d v z_d))^b4.
/// The boxes must be centred laterally at x~ and y~ and have disjoint closures.
QuadResult double_kernel_integral(const ModelParams& params, const HalfSpacePoint& x, const HalfSpacePoint& y,
                                  const BoxRegion& box_x, const BoxRegion& box_y, const WeightExponents& w,
                                  const OracleOptions& opt = {});

}  // namespace gfd
