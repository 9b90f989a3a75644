#include "gfd/kernel.hpp"

#include <algorithm>

#include <boost/math/tools/minima.hpp>

namespace gfd {

KernelGeometry make_geometry(const HalfSpacePoint& x, const HalfSpacePoint& y) {
  if (x.tilde.size() != y.tilde.size()) throw Error(ErrorCode::kDimensionMismatch, "point dimensions differ");
  double s = 0.0;
  for (std::size_t k = 0; k < x.tilde.size(); ++k) {
    const double t = x.tilde[k] - y.tilde[k];
    s += t * t;
  }
  const double dd = x.xd - y.xd;
  s += dd * dd;
  KernelGeometry g;
  g.m = std::min(x.xd, y.xd);
  g.M = std::max(x.xd, y.xd);
  g.rho = std::sqrt(s);
  return g;
}

BtildeKernel::BtildeKernel(const ModelParams& params)
    : d_(params.d),
      alpha_(params.alpha),
      b1_(params.beta[0]),
      b2_(params.beta[1]),
      b3_(params.beta[2]),
      b4_(params.beta[3]) {}

double BtildeKernel::diagonal_limit() const noexcept {
  const double l2 = std::log(2.0);
  return std::pow(l2, b3_ + b4_);
}

namespace {

KernelGeometry checked_geometry(const HalfSpacePoint& x, const HalfSpacePoint& y) {
  if (!(x.xd > 0.0) || !(y.xd > 0.0))
    throw Error(ErrorCode::kNonPositiveCoordinate, "points must lie in the open half-space");
  const KernelGeometry g = make_geometry(x, y);
  if (!(g.rho > 0.0)) throw Error(ErrorCode::kCoincidentPoints, "kernel evaluated on the diagonal x = y");
  return g;
}

// sup_{t in (0,1]} t^b log(1+1/t)^c
double power_log_sup(double b, double c) {
  if (c == 0.0) return 1.0;  // t^b <= 1
  if (b == 0.0) return HUGE_VAL;  // excluded by validation
  const auto neg = [b, c](double t) { return -(std::pow(t, b) * std::pow(std::log1p(1.0 / t), c)); };
  // the maximiser of a unimodal function on (0,1]; search on log scale
  const auto neg_log = [&](double lt) { return neg(std::exp(lt)); };
  const auto r = boost::math::tools::brent_find_minima(neg_log, -60.0, 0.0, 52);
  return std::max(-r.second, std::pow(std::log(2.0), c));
}

}  // namespace

double btilde_eval(const HalfSpacePoint& x, const HalfSpacePoint& y, const ModelParams& params) {
  const KernelGeometry g = checked_geometry(x, y);
  return BtildeKernel(params)(g.m, g.M, g.rho);
}

double jump_kernel_eval(const HalfSpacePoint& x, const HalfSpacePoint& y, const ModelParams& params) {
  const KernelGeometry g = checked_geometry(x, y);
  return BtildeKernel(params).jump(g.m, g.M, g.rho);
}

double btilde_upper_bound(const ModelParams& params) {
  return power_log_sup(params.beta[0], params.beta[2]) * power_log_sup(params.beta[1], params.beta[3]);
}

double kappa_eval(const HalfSpacePoint& x, const ModelParams& params, const ConstantResult& c) {
  return c.value * std::pow(x.xd, -params.alpha);
}

double kfun_eval(const HalfSpacePoint& y, const ModelParams& params) {
  double norm2 = y.xd * y.xd;
  for (double t : y.tilde) norm2 += t * t;
  const double norm = std::sqrt(norm2);
  const double b1 = params.beta[0], b2 = params.beta[1], b3 = params.beta[2], b4 = params.beta[3];
  double v = std::pow(std::min(y.xd, 1.0), b1) * std::pow(std::max(y.xd, 1.0), b2) /
             std::pow(norm, params.d + params.alpha + b1 + b2);
  if (b3 != 0.0) v *= std::pow(1.0 + std::abs(std::log(y.xd)), b3);
  if (b4 != 0.0) v *= std::pow(std::log1p(norm / std::max(y.xd, 1.0)), b4);
  return v;
}

double key_upper_envelope(const HalfSpacePoint& x, const HalfSpacePoint& y, const ModelParams& params) {
  const double rho = distance(x, y);
  if (rho < x.xd) throw Error(ErrorCode::kPrecondition, "envelope needs |x-y| >= x_d");
  const double b1 = params.beta[0], b3 = params.beta[2];
  double v = std::pow(x.xd, b1) * std::pow(rho, -b1);
  if (b3 != 0.0) {
    v *= std::max(std::pow(std::abs(std::log(x.xd)), b3), 1.0);
    double ny2 = y.xd * y.xd;
    for (double t : y.tilde) ny2 += t * t;
    const double ny = std::sqrt(ny2);
    if (ny >= 1.0) v *= 1.0 + std::pow(std::log(ny), b3);
  }
  return v;
}

double frontier_epsilon(const ModelParams& params) {
  const double a1 = params.beta[0] + params.alpha - params.p;
  const double a2 = params.beta[1] + params.alpha - params.p;
  const double big_m = 1.0 + std::max(a2 / a1, 1.0);
  return a1 - a2 / big_m;
}

}  // namespace gfd
