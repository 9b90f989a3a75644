#include "gfd/quad_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace gfd {
namespace {

constexpr double kPi = boost::math::constants::pi<double>();

// Height coordinate: either y_d itself or y_d = hi * t^k on t in [0,1].
struct HeightMap {
  bool power = false;
  double k = 1.0, hi = 1.0;

  HeightMap(double lo, double h, const OracleOptions& opt) : hi(h) {
    if (lo == 0.0 && opt.boundary_exponent) {
      const double e = *opt.boundary_exponent;
      if (!(e > -1.0)) throw Error(ErrorCode::kPrecondition, "boundary exponent must exceed -1");
      power = true;
      k = 1.0 / (1.0 + e);
    }
  }
  double t_lo(double lo) const { return power ? 0.0 : lo; }
  double t_hi() const { return power ? 1.0 : hi; }
  double height(double t) const { return power ? hi * std::pow(t, k) : t; }
  double jac(double t) const { return power ? k * hi * std::pow(t, k - 1.0) : 1.0; }
  double to_t(double yd) const { return power ? std::pow(yd / hi, 1.0 / k) : yd; }
};

CubatureOptions cub_opts(const OracleOptions& opt) {
  CubatureOptions c;
  c.rel_tol = opt.rel_tol;
  c.max_evals = opt.max_evals;
  return c;
}

double pw(double base, double e) { return e == 0.0 ? 1.0 : std::pow(base, e); }

QuadResult box_only(const BoxRegion& box, const HalfSpaceField& f, const OracleOptions& opt) {
  const int d = box.dim();
  const double b = box.height;
  const HeightMap hm(0.0, b, opt);
  std::vector<Box> boxes;
  Field field;
  std::vector<double> sing;  // singular point in integration coordinates
  bool sing_on_axis = false;
  HalfSpacePoint y(std::vector<double>(d - 1, 0.0), 1.0);
  if (d == 1) {
    boxes.push_back(Box{{hm.t_lo(0.0)}, {hm.t_hi()}});
    field = [&hm, &f, y](const double* z) mutable {
      y.xd = hm.height(z[0]);
      return f(y) * hm.jac(z[0]);
    };
    if (opt.singular_point) sing = {hm.to_t(std::clamp(opt.singular_point->xd, 0.0, b))};
  } else if (d == 2) {
    const double c = box.center_tilde[0], a = box.half_width;
    boxes.push_back(Box{{c - a, hm.t_lo(0.0)}, {c + a, hm.t_hi()}});
    field = [&hm, &f, y](const double* z) mutable {
      y.tilde[0] = z[0];
      y.xd = hm.height(z[1]);
      return f(y) * hm.jac(z[1]);
    };
    if (opt.singular_point)
      sing = {std::clamp(opt.singular_point->tilde.at(0), c - a, c + a),
              hm.to_t(std::clamp(opt.singular_point->xd, 0.0, b))};
  } else if (d == 3) {
    // cylindrical (r, theta, height) about the box axis
    const double a = box.half_width;
    const double cx = box.center_tilde[0], cy = box.center_tilde[1];
    boxes.push_back(Box{{0.0, 0.0, hm.t_lo(0.0)}, {a, 2.0 * kPi, hm.t_hi()}});
    field = [&hm, &f, y, cx, cy](const double* z) mutable {
      y.tilde[0] = cx + z[0] * std::cos(z[1]);
      y.tilde[1] = cy + z[0] * std::sin(z[1]);
      y.xd = hm.height(z[2]);
      return f(y) * z[0] * hm.jac(z[2]);
    };
    if (opt.singular_point) {
      const double dx = opt.singular_point->tilde.at(0) - cx, dy = opt.singular_point->tilde.at(1) - cy;
      const double r0 = std::min(std::hypot(dx, dy), a);
      double th = std::atan2(dy, dx);
      if (th < 0.0) th += 2.0 * kPi;
      sing = {r0, th, hm.to_t(std::clamp(opt.singular_point->xd, 0.0, b))};
      sing_on_axis = r0 == 0.0;
    }
  } else {
    throw Error(ErrorCode::kPrecondition, "box_integral supports d <= 3");
  }
  const int hax = d == 3 ? 2 : d - 1;
  boxes = refine_toward_face(std::move(boxes), hax, hm.t_lo(0.0), opt.grading_levels);
  if (!sing.empty()) {
    if (sing_on_axis) {
      boxes = refine_toward_face(std::move(boxes), 0, 0.0, opt.grading_levels);
      boxes = refine_toward_face(std::move(boxes), 2, sing[2], opt.grading_levels);
    } else {
      boxes = refine_toward_point(std::move(boxes), sing, opt.grading_levels);
    }
  }
  return cubature(field, std::move(boxes), cub_opts(opt));
}

}  // namespace

QuadResult box_integral(const BoxRegion& box, const BoxRegion* hole, const HalfSpaceField& f,
                        const OracleOptions& opt) {
  if (!(box.half_width > 0.0) || !(box.height > 0.0)) throw Error(ErrorCode::kDegenerateRegion, "empty box");
  QuadResult out = box_only(box, f, opt);
  if (hole) {
    if (hole->dim() != box.dim()) throw Error(ErrorCode::kDimensionMismatch, "hole dimension");
    double off = 0.0;
    for (std::size_t k = 0; k < box.center_tilde.size(); ++k)
      off += std::pow(hole->center_tilde[k] - box.center_tilde[k], 2);
    if (std::sqrt(off) + hole->half_width > box.half_width * (1.0 + 1e-15) || hole->height > box.height)
      throw Error(ErrorCode::kDegenerateRegion, "hole must lie inside the box");
    const QuadResult h = box_only(*hole, f, opt);
    out.value -= h.value;
    out.abs_error_estimate += h.abs_error_estimate;
    out.nodes += h.nodes;
  }
  return out;
}

QuadResult radial_integral(int d, double R, double lo, double hi, const std::function<double(double, double)>& g,
                           std::optional<double> singular_height, const OracleOptions& opt) {
  if (d != 2 && d != 3) throw Error(ErrorCode::kPrecondition, "radial oracles support d = 2 or 3");
  if (!(R > 0.0) || !(hi > lo) || lo < 0.0) throw Error(ErrorCode::kDegenerateRegion, "empty radial region");
  const HeightMap hm(lo, hi, opt);
  const Field field = [&](const double* z) {
    const double w = d == 2 ? 2.0 : 2.0 * kPi * z[0];
    return w * hm.jac(z[1]) * g(z[0], hm.height(z[1]));
  };
  std::vector<Box> boxes{Box{{0.0, hm.t_lo(lo)}, {R, hm.t_hi()}}};
  if (lo == 0.0) boxes = refine_toward_face(std::move(boxes), 1, 0.0, opt.grading_levels);
  if (singular_height) {
    const double s = hm.to_t(std::clamp(*singular_height, lo, hi));
    boxes = refine_toward_point(std::move(boxes), {0.0, s}, opt.grading_levels);
  }
  return cubature(field, std::move(boxes), cub_opts(opt));
}

namespace {

struct ShapeIntegrand {
  IntegralShape s;
  int d;
  double alpha, xd;

  double logs(double rho, double yd) const {
    double v = 1.0;
    if (s.beta != 0.0) v *= std::pow(std::log1p(2.0 * s.R / yd), s.beta);
    if (s.delta != 0.0) v *= std::pow(std::log1p(rho / std::min(std::max(xd, yd), rho)), s.delta);
    return v;
  }
  // f(y; gamma, beta, q, delta, x)
  double f(double r, double yd, double q) const {
    const double rho = std::hypot(r, yd - xd);
    return pw(yd, s.gamma) * std::pow(rho, -d + alpha - q) * logs(rho, yd);
  }
  // g(y; beta, q, delta, x)
  double g(double r, double yd) const {
    const double rho = std::hypot(r, yd - xd);
    return std::pow(std::min(xd / rho, 1.0), s.q) * std::pow(rho, -d + alpha) * logs(rho, yd);
  }
};

}  // namespace

QuadResult lemma61_numeric(BoxCase c, const IntegralShape& shape, int d, double alpha, double xd, double a1,
                           double a2, double a3, const OracleOptions& opt) {
  (void)lemma61_rhs(c, shape, alpha, xd, a1, a2, a3);  // precondition checks
  const ShapeIntegrand in{shape, d, alpha, xd};
  OracleOptions o = opt;
  switch (c) {
    case BoxCase::I1:
      o.boundary_exponent = shape.gamma;
      return radial_integral(d, shape.R, 0.0, a1, [&](double r, double y) { return in.f(r, y, shape.q); }, xd, o);
    case BoxCase::I2:
      if (a2 == a3) return {};
      return radial_integral(d, shape.R, a3, a2, [&](double r, double y) { return in.f(r, y, shape.q); }, xd, o);
    case BoxCase::I3:
      return radial_integral(d, shape.R, 0.5 * xd, 1.5 * xd, [&](double r, double y) { return in.g(r, y); }, xd, o);
  }
  return {};
}

QuadResult cor62_numeric(const IntegralShape& shape, int d, double alpha, double q, double xd, double a,
                         const OracleOptions& opt) {
  if (!(a > 0.0 && a <= shape.R)) throw Error(ErrorCode::kPrecondition, "a must lie in (0, R]");
  if (!(q > alpha - 1.0)) throw Error(ErrorCode::kPrecondition, "q must exceed alpha-1");
  if (!(shape.gamma > -1.0)) throw Error(ErrorCode::kPrecondition, "gamma must exceed -1");
  if (!(xd > 0.0)) throw Error(ErrorCode::kNonPositiveCoordinate, "x_d must be > 0");
  const ShapeIntegrand in{shape, d, alpha, xd};
  OracleOptions o = opt;
  o.boundary_exponent = shape.gamma;
  const auto integrand = [&](double r, double y) {
    const double rho = std::hypot(r, y - xd);
    return std::pow(std::min(xd / rho, 1.0), q) * in.f(r, y, 0.0);
  };
  return radial_integral(d, shape.R, 0.0, a, integrand, xd, o);
}

namespace {

// |S^{d-2}| int_0^a r^{d-2} (h/rho ^ 1)^p rho^{alpha-d} dr with rho = sqrt(r^2 + delta^2),
// via r = delta sinh(u), which turns the peak at r ~ delta into a smooth bump.
double lateral_profile(int d, double alpha, double a, double h, double delta, double p) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  delta = std::max(delta, 1e-300);
  const double sphere = d == 2 ? 2.0 : 2.0 * kPi;
  const auto integrand = [&](double u) {
    const double ch = std::cosh(u);
    const double rho = delta * ch;
    return std::pow(std::sinh(u), d - 2) * std::pow(ch, alpha - d + 1.0) * std::pow(std::min(h / rho, 1.0), p);
  };
  const double top = std::asinh(a / delta);
  double knot = h > delta ? std::acosh(h / delta) : 0.0;
  knot = std::min(knot, top);
  double v = 0.0;
  if (knot > 0.0) v += GK::integrate(integrand, 0.0, knot, 10, 1e-9);
  if (top > knot) v += GK::integrate(integrand, knot, top, 10, 1e-9);
  return sphere * std::pow(delta, alpha - 1.0) * v;
}

}  // namespace

QuadResult double_kernel_integral(const ModelParams& params, const HalfSpacePoint& x, const HalfSpacePoint& y,
                                  const BoxRegion& box_x, const BoxRegion& box_y, const WeightExponents& w,
                                  const OracleOptions& opt) {
  const int d = params.d;
  if (d != 2 && d != 3) throw Error(ErrorCode::kPrecondition, "double kernel oracle supports d = 2 or 3");
  if (x.dim() != d || y.dim() != d || box_x.dim() != d || box_y.dim() != d)
    throw Error(ErrorCode::kDimensionMismatch, "points and boxes must have dimension d");
  for (int k = 0; k < d - 1; ++k) {
    if (std::abs(box_x.center_tilde[k] - x.tilde[k]) > 1e-14 || std::abs(box_y.center_tilde[k] - y.tilde[k]) > 1e-14)
      throw Error(ErrorCode::kPrecondition, "boxes must be centred laterally at the points");
  }
  if (!(lateral_distance(x, y) > box_x.half_width + box_y.half_width))
    throw Error(ErrorCode::kDegenerateRegion, "boxes must have disjoint closures");

  // The integrand has no |w-z| factor, so the lateral integrals factor out:
  // value = int int A(w_d) K(w_d, z_d) B(z_d) dw_d dz_d. K is smooth off the
  // diagonal and A, B are singular at x_d, y_d only, so nested 1-D
  // double-exponential rules with those points as breaks converge fast.
  const double b1 = params.beta[0], b2 = params.beta[1], b3 = params.beta[2], b4 = params.beta[3];
  const auto kernel = [=](double w, double z) {
    const double lo = std::min(w, z), hi = std::max(w, z);
    double k = pw(lo, b1) * pw(hi, b2);
    if (b3 != 0.0) k *= std::pow(std::log1p(hi / lo), b3);
    if (b4 != 0.0) k *= std::pow(std::log1p(8.0 / hi), b4);
    return k;
  };
  using boost::math::quadrature::tanh_sinh;
  static thread_local tanh_sinh<double> outer_rule(12), inner_rule(12);
  const double inner_tol = 0.1 * opt.rel_tol;
  long nodes = 0;
  double err_sum = 0.0;

  const auto safe = [](double v) { return std::isfinite(v) ? v : 0.0; };
  const auto inner = [&](double z) {
    std::vector<double> breaks{0.0, box_x.height, z};
    if (x.xd < box_x.height) breaks.push_back(x.xd);
    std::sort(breaks.begin(), breaks.end());
    double v = 0.0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      const double a = breaks[k], b = std::min(breaks[k + 1], box_x.height);
      if (!(b > a)) continue;
      v += inner_rule.integrate(
          [&](double t) {
            ++nodes;
            return safe(lateral_profile(d, params.alpha, box_x.half_width, x.xd, std::abs(t - x.xd), w.px) *
                        kernel(t, z));
          },
          a, b, inner_tol);
    }
    return v;
  };
  std::vector<double> breaks{0.0, box_y.height};
  if (y.xd < box_y.height) breaks.push_back(y.xd);
  if (x.xd < box_y.height) breaks.push_back(x.xd);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  double value = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    double err = 0.0;
    value += outer_rule.integrate(
        [&](double z) {
          return safe(lateral_profile(d, params.alpha, box_y.half_width, y.xd, std::abs(z - y.xd), w.py) * inner(z));
        },
        breaks[k], breaks[k + 1], opt.rel_tol, &err);
    err_sum += err;
  }
  if (!std::isfinite(value)) throw Error(ErrorCode::kQuadratureFailure, "double kernel integral diverged");
  return {value, err_sum, nodes};
}

}  // namespace gfd
