#pragma once

#include "gfd/model_params.hpp"

namespace gfd {

/// F(x; gamma, beta) = int_x^1 h^gamma (log(2/h))^beta dh for x in (0,1].
double f_log_integral(double x, double gamma, double beta);

/// The four factors whose product is a Green-function estimate.
struct GreenFactors {
  double interior = 1.0;   // rho^{alpha-d}
  double min_power = 1.0;  // (m/rho ^ 1)^p
  double max_power = 1.0;  // (M/rho ^ 1)^{p or 2alpha-p+beta1+beta2}
  double log_factor = 1.0;
  double max_exponent = 0.0;
  double log_exponent = 0.0;
};

struct GreenEstimate {
  double value = 0.0;
  EstimateRegime regime;
  GreenFactors factors;
};

/// Regime-specific two-sided estimate shape of G(x,y) in the half-space.
GreenEstimate green_estimate(const HalfSpacePoint& x, const HalfSpacePoint& y, const ModelParams& params,
                             double regime_tol = kDefaultRegimeTol);

/// Single-formula version driven by the sign of a_p. Uses the indicator
/// 1[a_p >= 0] inside the logarithm, which is the one that reproduces the
/// regime formulas.
double green_estimate_unified(const HalfSpacePoint& x, const HalfSpacePoint& y, const ModelParams& params,
                              double regime_tol = kDefaultRegimeTol);

/// Exponents of the integrands
///   f(y) = y_d^gamma |x-y|^{-d+alpha-q} log(1+2R/y_d)^beta log(1+|x-y|/((x_d v y_d) ^ |x-y|))^delta
///   g(y) = (x_d/|x-y| ^ 1)^q |x-y|^{-d+alpha} (same two logs)
/// and the lateral radius R of the integration boxes.
struct IntegralShape {
  double gamma = 0.0;
  double beta = 0.0;
  double q = 0.0;
  double delta = 0.0;
  double R = 1.0;
};

enum class BoxCase { I1, I2, I3 };

const char* to_string(BoxCase c);

/// Closed-form comparison shape for the three box integrals:
///   I1 over D(R,a1), I2 over D(R,a2)\D(R,a3), I3 (of g) over D(R,3x_d/2)\D(R,x_d/2).
/// Throws kPrecondition naming the violated hypothesis.
double lemma61_rhs(BoxCase c, const IntegralShape& shape, double alpha, double xd, double a1, double a2,
                   double a3);

/// Three-branch shape of int_{D(R,R)} (x_d/|x-y| ^ 1)^q f(y; gamma, beta, 0, delta, x) dy.
double cor62_rhs(const IntegralShape& shape, double alpha, double xd, double q, double branch_tol = 1e-12);

/// Which branch cor62_rhs used: 1 (q < alpha+gamma), 2 (equality), 3 (q > alpha+gamma).
int cor62_branch(const IntegralShape& shape, double alpha, double q, double branch_tol = 1e-12);

/// Either a finite value or an explicit infinity tag.
struct ExtendedValue {
  bool infinite = false;
  double value = 0.0;

  static ExtendedValue finite(double v) { return {false, v}; }
  static ExtendedValue infinity() { return {true, 0.0}; }
};

/// Shape of E_x int_0^{tau_D} (Y_t^d)^gamma dt for boxes of size R and x_d <= R/10.
ExtendedValue killed_potential_rhs(double gamma, double xd, double R, const ModelParams& params,
                                   double branch_tol = 1e-12);

/// Same quantity for the whole half-space (no exit): finite only for
/// -p-1 < gamma < p-alpha, where it is x_d^{alpha+gamma}.
ExtendedValue halfspace_potential_rhs(double gamma, double xd, const ModelParams& params);

/// Expected lifetime shape: infinite for p <= alpha, x_d^alpha otherwise.
ExtendedValue lifetime_rhs(double xd, const ModelParams& params);

/// (x_d/r)^p, the shape of the exit-probability bounds.
double exit_prob_shape(double xd, double r, const ModelParams& params);

}  // namespace gfd
