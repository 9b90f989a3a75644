#include "gfd/closed_forms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gfd/kernel.hpp"

namespace gfd {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kPrecondition, what);
}

double power_min1(double t, double e) { return t < 1.0 ? std::pow(t, e) : 1.0; }

}  // namespace

const char* to_string(BoxCase c) {
  switch (c) {
    case BoxCase::I1: return "I1";
    case BoxCase::I2: return "I2";
    case BoxCase::I3: return "I3";
  }
  return "unknown";
}

double f_log_integral(double x, double gamma, double beta) {
  if (!(x > 0.0 && x <= 1.0)) throw Error(ErrorCode::kPrecondition, "F(x; gamma, beta) needs x in (0,1]");
  if (!(beta >= 0.0)) throw Error(ErrorCode::kNegativeBeta, "F(x; gamma, beta) needs beta >= 0");
  if (x == 1.0) return 0.0;
  const double l2 = std::log(2.0);
  if (beta == 0.0) {
    if (gamma == -1.0) return -std::log(x);
    const double g1 = gamma + 1.0;
    return -std::expm1(g1 * std::log(x)) / g1;
  }
  if (gamma == -1.0) {
    return (std::pow(std::log(2.0 / x), 1.0 + beta) - std::pow(l2, 1.0 + beta)) / (1.0 + beta);
  }
  // h = e^{-t}: int_0^{log(1/x)} e^{-(gamma+1)t} (log 2 + t)^beta dt
  const double g1 = gamma + 1.0;
  const auto integrand = [&](double t) { return std::exp(-g1 * t) * std::pow(l2 + t, beta); };
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, -std::log(x), 30, 1e-13,
                                                                        &err);
}

GreenEstimate green_estimate(const HalfSpacePoint& x, const HalfSpacePoint& y, const ModelParams& params,
                             double regime_tol) {
  const KernelGeometry g = make_geometry(x, y);
  if (!(g.rho > 0.0)) throw Error(ErrorCode::kCoincidentPoints, "Green estimate needs x != y");
  GreenEstimate out;
  out.regime = classify_regime(params, regime_tol);
  const double p = params.p;
  GreenFactors& f = out.factors;
  f.interior = std::pow(g.rho, params.alpha - params.d);
  f.min_power = power_min1(g.m / g.rho, p);
  const double log_arg = std::log1p(g.rho / std::min(g.M, g.rho));
  switch (out.regime.tag) {
    case RegimeTag::PolyPoly:
      f.max_exponent = p;
      f.log_exponent = 0.0;
      break;
    case RegimeTag::CriticalLog:
      f.max_exponent = p;
      f.log_exponent = params.beta[3] + 1.0;
      break;
    case RegimeTag::Anomalous:
      f.max_exponent = 2.0 * params.alpha - p + params.beta[0] + params.beta[1];
      f.log_exponent = params.beta[3];
      break;
  }
  f.max_power = power_min1(g.M / g.rho, f.max_exponent);
  f.log_factor = f.log_exponent == 0.0 ? 1.0 : std::pow(log_arg, f.log_exponent);
  out.value = f.interior * f.min_power * f.max_power * f.log_factor;
  return out;
}

double green_estimate_unified(const HalfSpacePoint& x, const HalfSpacePoint& y, const ModelParams& params,
                              double regime_tol) {
  const KernelGeometry g = make_geometry(x, y);
  if (!(g.rho > 0.0)) throw Error(ErrorCode::kCoincidentPoints, "Green estimate needs x != y");
  double a_p = regime_exponent(params);
  if (std::abs(a_p) <= regime_tol) a_p = 0.0;
  const double p = params.p;
  const double on = a_p >= 0.0 ? 1.0 : 0.0;
  const double log_exp = params.beta[3] + (a_p == 0.0 ? 1.0 : 0.0);
  const double logf = std::pow(std::log(2.0 + on * g.rho / std::min(g.M, g.rho)), log_exp);
  return std::pow(g.rho, params.alpha - params.d) * power_min1(g.m / g.rho, p) *
         power_min1(g.M / g.rho, p - std::max(a_p, 0.0)) * logf;
}

double lemma61_rhs(BoxCase c, const IntegralShape& s, double alpha, double xd, double a1, double a2, double a3) {
  require(s.R > 0.0, "R must be > 0");
  require(s.beta >= 0.0, "beta must be >= 0");
  require(xd > 0.0 && xd <= 2.0 * s.R / 3.0, "x_d must lie in (0, 2R/3]");
  require(s.q > alpha - 1.0, "q must exceed alpha-1");
  const double lg = std::log(2.0 * s.R / xd);
  switch (c) {
    case BoxCase::I1:
      require(s.gamma > -1.0, "I1 needs gamma > -1");
      require(a1 > 0.0 && a1 <= xd / 2.0, "I1 needs 0 < a1 <= x_d/2");
      return std::pow(xd, alpha - s.q - 1.0) * std::pow(a1, s.gamma + 1.0) *
             std::pow(std::log(2.0 * s.R / a1), s.beta);
    case BoxCase::I2: {
      require(a3 >= 1.5 * xd && a3 <= a2 && a2 <= s.R, "I2 needs 3x_d/2 <= a3 <= a2 <= R");
      const double e = s.gamma + alpha - s.q - 1.0;
      return std::pow(s.R, s.gamma + alpha - s.q) *
             (f_log_integral(a3 / s.R, e, s.beta) - f_log_integral(a2 / s.R, e, s.beta));
    }
    case BoxCase::I3:
      return std::pow(xd, alpha) * std::pow(lg, s.beta);
  }
  return 0.0;
}

int cor62_branch(const IntegralShape& s, double alpha, double q, double branch_tol) {
  const double t = alpha + s.gamma;
  if (std::abs(q - t) <= branch_tol) return 2;
  return q < t ? 1 : 3;
}

double cor62_rhs(const IntegralShape& s, double alpha, double xd, double q, double branch_tol) {
  require(s.R > 0.0, "R must be > 0");
  require(q > alpha - 1.0, "q must exceed alpha-1");
  require(s.gamma > -1.0, "gamma must exceed -1");
  require(s.beta >= 0.0, "beta must be >= 0");
  require(xd > 0.0 && xd < s.R / 2.0, "x_d must lie in (0, R/2)");
  const double lg = std::log(2.0 * s.R / xd);
  switch (cor62_branch(s, alpha, q, branch_tol)) {
    case 1: return std::pow(s.R, alpha + s.gamma - q) * std::pow(xd, q);
    case 2: return std::pow(xd, q) * std::pow(lg, s.beta + 1.0);
    default: return std::pow(xd, alpha + s.gamma) * std::pow(lg, s.beta);
  }
}

ExtendedValue killed_potential_rhs(double gamma, double xd, double R, const ModelParams& params,
                                   double branch_tol) {
  require(R > 0.0, "R must be > 0");
  require(xd > 0.0 && xd <= R / 10.0, "x_d must lie in (0, R/10]");
  const double p = params.p, alpha = params.alpha;
  if (gamma <= -p - 1.0) return ExtendedValue::infinity();
  if (std::abs(gamma - (p - alpha)) <= branch_tol) return ExtendedValue::finite(std::pow(xd, p) * std::log(R / xd));
  if (gamma > p - alpha) return ExtendedValue::finite(std::pow(R, alpha + gamma - p) * std::pow(xd, p));
  return ExtendedValue::finite(std::pow(xd, alpha + gamma));
}

ExtendedValue halfspace_potential_rhs(double gamma, double xd, const ModelParams& params) {
  require(xd > 0.0, "x_d must be > 0");
  const double p = params.p, alpha = params.alpha;
  if (gamma >= p - alpha || gamma <= -p - 1.0) return ExtendedValue::infinity();
  return ExtendedValue::finite(std::pow(xd, alpha + gamma));
}

ExtendedValue lifetime_rhs(double xd, const ModelParams& params) { return halfspace_potential_rhs(0.0, xd, params); }

double exit_prob_shape(double xd, double r, const ModelParams& params) {
  require(xd > 0.0 && xd < r, "exit shape needs 0 < x_d < r");
  return std::pow(xd / r, params.p);
}

}  // namespace gfd
