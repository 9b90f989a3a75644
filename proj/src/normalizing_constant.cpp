// Killing constant C(alpha, p, B~).
//
// The s-integrand h(s) = (s^p-1)(1-s^{alpha-p-1})/(1-s)^{1+alpha} times B~ is
// nonnegative on (0,1), behaves like s^{alpha-p-1+beta1} (times logs) at 0 and
// like (1-s)^{1-alpha} at 1. Each half of (0,1) is mapped by a substitution
// that removes the endpoint power, and B~ contributes kinks where |x-y|
// crosses m or M, which are passed as breakpoints.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "gfd/kernel.hpp"

namespace gfd {
namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr unsigned kMaxDepth = 12;
constexpr double kHalfPi = boost::math::constants::half_pi<double>();
constexpr double kPi = boost::math::constants::pi<double>();

// Surface measure of the unit sphere S^{k-1} in R^k.
double sphere_area(int k) {
  return 2.0 * std::pow(kPi, 0.5 * k) / boost::math::tgamma(0.5 * k);
}

struct Integrand {
  double alpha, p;
  std::array<double, 4> beta;
  BtildeKernel kernel;
  mutable long evals = 0;

  // h(s) * B~ with s = 1 - t, both supplied for accuracy near either end.
  double operator()(double s, double t, double lateral_scale) const {
    ++evals;
    const double log_s = s < 0.5 ? std::log(s) : std::log1p(-t);
    const double a = std::expm1(p * log_s);                        // s^p - 1
    const double b = -std::expm1((alpha - p - 1.0) * log_s);      // 1 - s^{alpha-p-1}
    const double h = a * b * std::pow(t, -1.0 - alpha);
    const double rho = t * lateral_scale;
    const double v = h * kernel(s, 1.0, rho);
    // the double-exponential rule samples within a few ulps of the ends,
    // where the factors over/underflow; the true integrand is negligible there
    return std::isfinite(v) ? v : 0.0;
  }

  // s h(s) B~ for s = e^{log_s} so small that 1 - s rounds to 1, in log
  // form because s itself may underflow. Here m = s < rho = R and M = 1 <= rho.
  double tiny_s(double log_s, double lateral_scale, const std::array<double, 4>& beta) const {
    ++evals;
    const double c = alpha - p - 1.0;
    const double log_rho = std::log(lateral_scale);
    double lv = (alpha - p + beta[0]) * log_s + std::log(-std::expm1(p * log_s)) + std::log(-std::expm1(-c * log_s));
    lv -= (beta[0] + beta[1]) * log_rho;
    if (beta[2] != 0.0) lv += beta[2] * std::log(-log_s);
    if (beta[3] != 0.0) lv += beta[3] * std::log(std::log1p(lateral_scale));
    return std::exp(lv);
  }
};

struct SegmentSum {
  double value = 0.0;
  double error = 0.0;
};

// Segments are integrated to a tolerance relative to the whole integral, not to
// themselves: a sliver between two nearly coincident kinks otherwise exhausts
// the bisection depth chasing roundoff.
template <class F>
void add_segments(SegmentSum& acc, const F& f, const std::vector<double>& knots, double tol) {
  static thread_local boost::math::quadrature::exp_sinh<double> es(10);
  const auto tail = [&](std::size_t i) { return [&f, a = knots[i]](double w) { return f(a + w); }; };
  std::vector<double> rough(knots.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (!(knots[i + 1] > knots[i])) continue;
    rough[i] = std::isinf(knots[i + 1]) ? std::abs(es.integrate(tail(i), 1e-3))
                                         : std::abs(gauss_kronrod<double, 31>::integrate(f, knots[i], knots[i + 1], 0, 0.0));
    total += rough[i];
  }
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (!(knots[i + 1] > knots[i])) continue;
    const double scale = rough[i] > 0.0 ? std::max(1.0, total / rough[i]) : 1e6;
    double err = 0.0;
    const double rel = std::min(tol * scale, 0.1);
    if (std::isinf(knots[i + 1])) {
      double l1 = 0.0;
      acc.value += es.integrate(tail(i), rel, &err, &l1);
      acc.error += err;
      continue;
    }
    const double v = gauss_kronrod<double, 31>::integrate(f, knots[i], knots[i + 1], kMaxDepth, rel, &err);
    acc.value += v;
    acc.error += err;
  }
}

// Integral over s in (0,1) for lateral scale R = sqrt(|u|^2+1).
SegmentSum s_integral(const Integrand& f, double lateral_scale, double e0, double tol) {
  // s = exp(-v/eps) / 2 on (0,1/2] with eps = e0+1, so that s^e0 ds becomes
  // e^{-v} dv; a power substitution would need the exponent 2/eps, which
  // explodes as p approaches alpha+beta1. 1-s = w^k1 / 2 on [1/2,1).
  const double eps = e0 + 1.0;
  const double k1 = 2.0 / (2.0 - f.alpha);

  // B~ kinks: rho = s  <=>  s = R/(1+R);  rho = 1  <=>  s = 1 - 1/R
  std::vector<double> kinks{lateral_scale / (1.0 + lateral_scale)};
  if (lateral_scale > 1.0) kinks.push_back(1.0 - 1.0 / lateral_scale);

  // the (s^{alpha-p-1} - 1) difference leaves an e^{-v/eps} layer at v = 0
  // that exp-sinh resolves poorly, so the semi-infinite piece starts at v = 1
  std::vector<double> lower{0.0, 1.0, INFINITY};  // in v on [0, inf)
  if (eps < 0.04) lower.push_back(20.0 * eps);
  std::vector<double> upper{0.0, 1.0};       // in w on (0, 1]
  for (double s : kinks) {
    if (s > 0.0 && s < 0.5) lower.push_back(-eps * std::log(2.0 * s));
    if (s >= 0.5 && s < 1.0) upper.push_back(std::pow(2.0 * (1.0 - s), 1.0 / k1));
  }
  std::sort(lower.begin(), lower.end());
  std::sort(upper.begin(), upper.end());

  const auto lower_f = [&](double v) {
    const double log_s = -std::log(2.0) - v / eps;
    if (log_s < -230.0) return f.tiny_s(log_s, lateral_scale, f.beta) / eps;
    const double s = std::exp(log_s);
    return f(s, 1.0 - s, lateral_scale) * s / eps;
  };
  const auto upper_f = [&](double w) {
    const double t = 0.5 * std::pow(w, k1);
    if (!(t > 0.0)) return 0.0;
    const double jac = 0.5 * k1 * std::pow(w, k1 - 1.0);
    return f(1.0 - t, t, lateral_scale) * jac;
  };

  SegmentSum acc;
  add_segments(acc, lower_f, lower, tol);
  add_segments(acc, upper_f, upper, tol);
  return acc;
}

}  // namespace

ConstantResult normalizing_constant(const ModelParams& params, double quad_tol) {
  const ModelParams pr = validate_params(params);
  if (!(quad_tol > 0.0)) throw Error(ErrorCode::kPrecondition, "quad_tol must be > 0");

  Integrand f{pr.alpha, pr.p, pr.beta, BtildeKernel(pr)};
  const double e0 = pr.alpha - pr.p - 1.0 + pr.beta[0];  // endpoint exponent at s = 0
  const double inner_tol = std::max(quad_tol * 1e-2, 1e-14);

  ConstantResult out;
  if (pr.d == 1) {
    const SegmentSum r = s_integral(f, 1.0, e0, inner_tol);
    out.value = r.value;
    out.abs_error_estimate = r.error;
  } else {
    // Radial reduction, |u| = tan(theta):
    //   |S^{d-2}| int_0^{pi/2} sin^{d-2}(theta) cos^alpha(theta) I(sec theta) dtheta
    const bool constant_kernel = pr.beta[0] == 0.0 && pr.beta[1] == 0.0 && pr.beta[2] == 0.0 && pr.beta[3] == 0.0;
    // max over theta of weight * inner error; times pi/2 it bounds the
    // propagated inner error
    double inner_weighted_max = 0.0;
    // int_0^{pi/2} sin^{d-2} cos^alpha = B((d-1)/2, (alpha+1)/2) / 2
    const double weight_mass = 0.5 * boost::math::beta(0.5 * (pr.d - 1), 0.5 * (pr.alpha + 1.0));
    const auto outer = [&](double theta, double c) {
      const double w = std::pow(std::sin(theta), pr.d - 2) * std::pow(c, pr.alpha);
      if (!(w > 0.0) && pr.d > 2) return 0.0;
      if (!(c > 0.0)) return 0.0;
      const SegmentSum r = s_integral(f, 1.0 / c, e0, inner_tol);
      inner_weighted_max = std::max(inner_weighted_max, w * r.error);
      return w * r.value;
    };
    // near theta = pi/2 the integrand vanishes like a fractional power of
    // cos(theta); phi = pi/2 - theta = (pi/4) v^4 smooths it
    const auto near_top = [&](double v) {
      const double phi = 0.25 * kPi * std::pow(v, 4.0);
      return outer(kHalfPi - phi, std::sin(phi)) * kPi * std::pow(v, 3.0);
    };
    double outer_err = 0.0;
    double value = 0.0;
    if (constant_kernel) {
      // B~ = 1: the two integrals separate.
      const SegmentSum r = s_integral(f, 1.0, e0, inner_tol);
      value = r.value * weight_mass;
      inner_weighted_max = r.error * weight_mass / kHalfPi;
    } else {
      const double otol = std::max(quad_tol * 0.1, 1e-13);
      double e1 = 0.0, e2 = 0.0;
      value = gauss_kronrod<double, 31>::integrate([&](double t) { return outer(t, std::cos(t)); }, 0.0,
                                                   0.5 * kHalfPi, kMaxDepth, otol, &e1);
      value += gauss_kronrod<double, 31>::integrate(near_top, 0.0, 1.0, kMaxDepth, otol, &e2);
      outer_err = e1 + e2;
    }
    const double area = pr.d == 2 ? 2.0 : sphere_area(pr.d - 1);
    out.value = area * value;
    out.abs_error_estimate = area * (outer_err + kHalfPi * inner_weighted_max);
  }
  out.evaluations = f.evals;
  if (!(out.value > 0.0) || !std::isfinite(out.value) || out.abs_error_estimate > quad_tol * out.value)
    throw Error(ErrorCode::kQuadratureFailure, "normalizing constant quadrature did not reach tolerance");
  return out;
}

}  // namespace gfd
