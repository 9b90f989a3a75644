#pragma once

#include <cmath>

#include "gfd/model_params.hpp"

namespace gfd {

/// (min(x_d,y_d), max(x_d,y_d), |x-y|) for a pair of half-space points.
struct KernelGeometry {
  double m = 1.0;
  double M = 1.0;
  double rho = 0.0;
};

KernelGeometry make_geometry(const HalfSpacePoint& x, const HalfSpacePoint& y);

/// Degenerate kernel factor evaluated from geometry alone. Holds the exponents
/// so that hot loops (assembly, Monte Carlo) skip pow() calls for zero betas.
class BtildeKernel {
 public:
  explicit BtildeKernel(const ModelParams& params);

  /// Requires rho > 0, m > 0; no argument checks.
  double operator()(double m, double M, double rho) const noexcept {
    const double s = m < rho ? m / rho : 1.0;
    const double u = M < rho ? M / rho : 1.0;
    double v = 1.0;
    if (b1_ != 0.0) v *= std::pow(s, b1_);
    if (b2_ != 0.0) v *= std::pow(u, b2_);
    if (b3_ != 0.0) {
      const double top = M < rho ? M : rho;
      const double bot = m < rho ? m : rho;
      v *= std::pow(std::log1p(top / bot), b3_);
    }
    if (b4_ != 0.0) {
      const double top = M < rho ? M : rho;
      v *= std::pow(std::log1p(rho / top), b4_);
    }
    return v;
  }

  /// |x-y|^{-d-alpha} times the degenerate factor.
  double jump(double m, double M, double rho) const noexcept {
    return std::pow(rho, -static_cast<double>(d_) - alpha_) * (*this)(m, M, rho);
  }

  /// Value on the diagonal limit rho -> 0 with m, M > 0 fixed.
  double diagonal_limit() const noexcept;

 private:
  int d_;
  double alpha_;
  double b1_, b2_, b3_, b4_;
};

double btilde_eval(const HalfSpacePoint& x, const HalfSpacePoint& y, const ModelParams& params);
double jump_kernel_eval(const HalfSpacePoint& x, const HalfSpacePoint& y, const ModelParams& params);

/// sup over all pairs of the degenerate factor: the product of
/// sup_{t in (0,1]} t^b1 log(1+1/t)^b3 and sup_{t in (0,1]} t^b2 log(1+1/t)^b4.
double btilde_upper_bound(const ModelParams& params);

struct ConstantResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  long evaluations = 0;
};

/// Killing constant C(alpha, p, B~) by nested graded quadrature. Throws
/// kPOutOfRange for inadmissible p and kQuadratureFailure when the error
/// estimate stays above quad_tol * value.
ConstantResult normalizing_constant(const ModelParams& params, double quad_tol = 1e-10);

/// C(alpha,p,B~) x_d^{-alpha}
double kappa_eval(const HalfSpacePoint& x, const ModelParams& params, const ConstantResult& c);
inline double kappa_eval(double xd, double alpha, double c) { return c * std::pow(xd, -alpha); }

/// Frontier kernel k(y) used in the jump-kernel bounds away from the unit box.
double kfun_eval(const HalfSpacePoint& y, const ModelParams& params);

/// Shape (without constant) of the upper bound of B~ valid when |x-y| >= x_d.
/// The |y|-log factor is dropped when beta3 = 0.
double key_upper_envelope(const HalfSpacePoint& x, const HalfSpacePoint& y, const ModelParams& params);

/// Exponent epsilon of the z_d^{beta1-epsilon} k(y) upper bound on J(z,y).
double frontier_epsilon(const ModelParams& params);

}  // namespace gfd
