#include "gfd/nonlocal_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gfd/parallel.hpp"

namespace gfd {
namespace {

constexpr double kPi = boost::math::constants::pi<double>();
constexpr double kGaussX[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
constexpr double kGaussW[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};

int slot_of(int d, int p, int q) {
  if (d == 2) return p;
  if (p < q) std::swap(p, q);
  return p * (p + 1) / 2 + q;
}

// Integral of J(x, y) over a cell [lo, hi] (lateral coordinates relative to
// x~, last coordinate absolute height) with x = (0~, zx). Boxes closer to x
// than their diameter are bisected along their longer sides.
class CellIntegrator {
 public:
  CellIntegrator(const BtildeKernel& k, int d, double zx) : k_(k), d_(d), zx_(zx) {}

  double operator()(const double* lo, const double* hi, int depth = 0) const {
    double dist2 = 0.0, diam2 = 0.0, maxlen = 0.0;
    for (int a = 0; a < d_; ++a) {
      const double c = a == d_ - 1 ? zx_ : 0.0;
      const double gap = c < lo[a] ? lo[a] - c : (c > hi[a] ? c - hi[a] : 0.0);
      dist2 += gap * gap;
      const double len = hi[a] - lo[a];
      diam2 += len * len;
      maxlen = std::max(maxlen, len);
    }
    if (dist2 >= diam2 || depth >= 40) return gauss(lo, hi);
    // split every side that is at least half the longest one
    double mid[3];
    bool split[3];
    int count = 0;
    for (int a = 0; a < d_; ++a) {
      split[a] = hi[a] - lo[a] >= 0.5 * maxlen;
      mid[a] = 0.5 * (lo[a] + hi[a]);
      count += split[a];
    }
    double sum = 0.0;
    for (int mask = 0; mask < (1 << count); ++mask) {
      double clo[3], chi[3];
      int bit = 0;
      for (int a = 0; a < d_; ++a) {
        if (!split[a]) {
          clo[a] = lo[a];
          chi[a] = hi[a];
          continue;
        }
        if ((mask >> bit++) & 1) {
          clo[a] = mid[a];
          chi[a] = hi[a];
        } else {
          clo[a] = lo[a];
          chi[a] = mid[a];
        }
      }
      sum += (*this)(clo, chi, depth + 1);
    }
    return sum;
  }

 private:
  double gauss(const double* lo, const double* hi) const {
    double c[3] = {}, h[3] = {};
    for (int a = 0; a < d_; ++a) {
      c[a] = 0.5 * (lo[a] + hi[a]);
      h[a] = 0.5 * (hi[a] - lo[a]);
    }
    double sum = 0.0;
    if (d_ == 2) {
      for (int i = 0; i < 4; ++i) {
        const double y1 = c[0] + h[0] * kGaussX[i];
        for (int j = 0; j < 4; ++j) {
          const double yd = c[1] + h[1] * kGaussX[j];
          sum += kGaussW[i] * kGaussW[j] * eval(y1 * y1, yd);
        }
      }
    } else {
      for (int i = 0; i < 4; ++i) {
        const double y1 = c[0] + h[0] * kGaussX[i];
        for (int j = 0; j < 4; ++j) {
          const double y2 = c[1] + h[1] * kGaussX[j];
          for (int l = 0; l < 4; ++l) {
            const double yd = c[2] + h[2] * kGaussX[l];
            sum += kGaussW[i] * kGaussW[j] * kGaussW[l] * eval(y1 * y1 + y2 * y2, yd);
          }
        }
      }
    }
    double vol = 1.0;
    for (int a = 0; a < d_; ++a) vol *= h[a];
    return sum * vol;
  }

  double eval(double lat2, double yd) const {
    const double dz = yd - zx_;
    const double rho = std::sqrt(lat2 + dz * dz);
    return k_.jump(std::min(yd, zx_), std::max(yd, zx_), rho);
  }

  const BtildeKernel& k_;
  int d_;
  double zx_;
};

// Second moments int_cell z_k^2 J(x, x+z) dz over the cell centred at x with
// lateral side w and height h. Returns {lateral (per axis), vertical}.
std::array<double, 2> own_cell_moments(const BtildeKernel& k, int d, double alpha, double zx, double w, double h,
                                       double tol) {
  // int_0^R r^{1-alpha} B~ dr along a ray with vertical component ez. With
  // r = t^{1/(2-alpha)} the power is absorbed; breakpoints at the kinks of B~.
  const double kexp = 1.0 / (2.0 - alpha);
  const auto radial = [&](double ez, double R) {
    const auto g = [&](double t) {
      const double r = std::pow(t, kexp);
      const double yd = zx + r * ez;
      if (!(yd > 0.0) || !(r > 0.0)) return 0.0;
      return kexp * k(std::min(yd, zx), std::max(yd, zx), r);
    };
    double knots[4] = {0.0, zx, zx / (1.0 - ez), R};
    std::sort(knots + 1, knots + 3);
    double total = 0.0, prev = 0.0;
    for (int q = 1; q < 4; ++q) {
      const double e = std::min(knots[q], R);
      if (e <= prev) continue;
      double err = 0.0;
      total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
          g, std::pow(prev, 1.0 / kexp), std::pow(e, 1.0 / kexp), 8, 1e-9, &err);
      prev = e;
    }
    return total;
  };
  std::array<double, 2> out{0.0, 0.0};
  if (d == 2) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double tc = std::atan2(h, w);
    const double breaks[4] = {-0.5 * kPi, -tc, tc, 0.5 * kPi};
    for (int which = 0; which < 2; ++which) {
      const auto f = [&](double t) {
        const double c = std::cos(t), s = std::sin(t);
        const double R = std::min(c > 0.0 ? 0.5 * w / c : std::numeric_limits<double>::infinity(),
                                  s != 0.0 ? 0.5 * h / std::abs(s) : std::numeric_limits<double>::infinity());
        const double e2 = which == 0 ? c * c : s * s;
        return e2 * radial(s, R);
      };
      double total = 0.0;
      for (int p = 0; p < 3; ++p) total += GK::integrate(f, breaks[p], breaks[p + 1], 8, tol);
      out[which] = 2.0 * total;  // theta and pi - theta give the same value
    }
    return out;
  }
  // d = 3: directions (u = cos of the polar angle, psi in [0, pi/4]); the
  // square section has eight symmetries
  for (int which = 0; which < 2; ++which) {
    const Field f = [&](const double* z) {
      const double u = z[0], psi = z[1];
      const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
      const double lat = s * std::cos(psi);
      const double R = std::min(lat > 0.0 ? 0.5 * w / lat : std::numeric_limits<double>::infinity(),
                                u != 0.0 ? 0.5 * h / std::abs(u) : std::numeric_limits<double>::infinity());
      const double e2 = which == 0 ? 0.5 * s * s : u * u;
      return e2 * radial(u, R);
    };
    CubatureOptions co;
    co.rel_tol = tol;
    co.max_evals = 400000;
    std::vector<Box> boxes{Box{{-1.0, 0.0}, {0.0, 0.25 * kPi}}, Box{{0.0, 0.0}, {1.0, 0.25 * kPi}}};
    out[which] = 8.0 * cubature(f, boxes, co, true).value;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exterior pieces. Coordinates relative to x~ for lateral axes. Each lateral
// axis is Free (whole line) or a half line {sigma y > delta}; the vertical
// range is the slab (0, b) or the region above b.

struct Piece {
  int d = 2;
  bool lateral_half[2] = {false, false};
  double delta[2] = {0.0, 0.0};
  double sigma[2] = {1.0, 1.0};
  bool above = false;
  double b = 1.0;
};

class TailMap {
 public:
  TailMap(double start, double L, double alpha) : start_(start), L_(L), k_(2.0 / alpha) {}
  double value(double u) const { return start_ + L_ * std::expm1(-k_ * std::log1p(-u)); }
  double jac(double u) const { return L_ * k_ * std::pow(1.0 - u, -k_ - 1.0); }

 private:
  double start_, L_, k_;
};

double piece_integral(const Piece& pc, const BtildeKernel& kern, double alpha, const HalfSpacePoint& x,
                      const HalfSpaceField* g, std::optional<double> g_exponent, bool grade_bottom, double tol) {
  const int d = pc.d;
  const double zx = x.xd;
  // distance from x to the piece sets the length scale of every map
  double dist2 = 0.0;
  for (int k = 0; k < d - 1; ++k)
    if (pc.lateral_half[k]) dist2 += pc.delta[k] * pc.delta[k];
  if (pc.above) dist2 += (pc.b - zx) * (pc.b - zx);
  const double L = std::max(std::sqrt(dist2), 1e-3 * pc.b);

  std::vector<TailMap> lat;
  for (int k = 0; k < d - 1; ++k) lat.emplace_back(pc.lateral_half[k] ? pc.delta[k] : 0.0, L, alpha);
  const TailMap up(pc.b, L, alpha);
  const int n = d;
  // height substitution y_d = b t^{1/(1+e)} flattens a known power of g
  const double hk = g_exponent ? 1.0 / (1.0 + *g_exponent) : 1.0;
  HalfSpacePoint y(std::vector<double>(d - 1, 0.0), 1.0);
  const Field f = [&, y](const double* z) mutable {
    double w = 1.0, lat2 = 0.0;
    for (int k = 0; k < d - 1; ++k) {
      const double u = z[k];
      double t;
      if (pc.lateral_half[k]) {
        t = lat[k].value(u);
        w *= lat[k].jac(u);
        y.tilde[k] = x.tilde[k] + pc.sigma[k] * t;
      } else {
        // free axis: u in (-1, 1), symmetric map
        const double au = std::abs(u);
        t = lat[k].value(au);
        w *= lat[k].jac(au);
        y.tilde[k] = x.tilde[k] + (u < 0.0 ? -t : t);
      }
      lat2 += t * t;
    }
    double yd;
    if (pc.above) {
      yd = up.value(z[n - 1]);
      w *= up.jac(z[n - 1]);
    } else if (hk != 1.0) {
      yd = pc.b * std::pow(z[n - 1], hk);
      w *= hk * pc.b * std::pow(z[n - 1], hk - 1.0);
    } else {
      yd = z[n - 1];
    }
    if (!(yd > 0.0)) return 0.0;
    const double dz = yd - zx;
    const double rho = std::sqrt(lat2 + dz * dz);
    double v = kern.jump(std::min(yd, zx), std::max(yd, zx), rho) * w;
    if (g) {
      y.xd = yd;
      v *= (*g)(y);
    }
    return std::isfinite(v) ? v : 0.0;
  };

  Box base;
  std::vector<double> peak(n);
  for (int k = 0; k < d - 1; ++k) {
    base.lo.push_back(pc.lateral_half[k] ? 0.0 : -1.0);
    base.hi.push_back(1.0);
    peak[k] = 0.0;
  }
  if (pc.above) {
    base.lo.push_back(0.0);
    base.hi.push_back(1.0);
    peak[n - 1] = 0.0;
  } else {
    base.lo.push_back(0.0);
    base.hi.push_back(hk != 1.0 ? 1.0 : pc.b);
    const double zc = std::clamp(zx, 0.0, pc.b);
    peak[n - 1] = hk != 1.0 ? std::pow(zc / pc.b, 1.0 / hk) : zc;
  }
  std::vector<Box> boxes{base};
  const double span = pc.above ? 1.0 : pc.b;
  const int levels = std::clamp(static_cast<int>(std::ceil(std::log2(span / L))) + 3, 3, 40);
  boxes = refine_toward_point(std::move(boxes), peak, levels);
  if (!pc.above && grade_bottom) boxes = refine_toward_face(std::move(boxes), n - 1, 0.0, 12);
  CubatureOptions co;
  co.rel_tol = tol;
  co.max_evals = 4'000'000;
  return cubature(f, std::move(boxes), co).value;
}

// Integral of J(x,.) g over a box (lateral coordinates absolute, height last).
double box_source(const Box& bx, const BtildeKernel& kern, const HalfSpacePoint& x, const HalfSpaceField& g,
                  std::optional<double> g_exponent, double tol) {
  const int d = bx.dim();
  const double zx = x.xd;
  const bool graded = g_exponent && bx.lo[d - 1] == 0.0;
  const double hk = graded ? 1.0 / (1.0 + *g_exponent) : 1.0;
  const double top = bx.hi[d - 1];
  HalfSpacePoint y(std::vector<double>(d - 1, 0.0), 1.0);
  const Field f = [&, y](const double* z) mutable {
    double lat2 = 0.0;
    for (int k = 0; k < d - 1; ++k) {
      y.tilde[k] = z[k];
      const double t = z[k] - x.tilde[k];
      lat2 += t * t;
    }
    double w = 1.0;
    double yd = z[d - 1];
    if (graded) {
      yd = top * std::pow(z[d - 1], hk);
      w = hk * top * std::pow(z[d - 1], hk - 1.0);
    }
    if (!(yd > 0.0)) return 0.0;
    y.xd = yd;
    const double dz = yd - zx;
    const double rho = std::sqrt(lat2 + dz * dz);
    const double v = kern.jump(std::min(yd, zx), std::max(yd, zx), rho) * g(y) * w;
    return std::isfinite(v) ? v : 0.0;
  };
  Box b = bx;
  if (graded) {
    b.lo[d - 1] = 0.0;
    b.hi[d - 1] = 1.0;
  }
  const double zt = graded ? std::pow(std::clamp(zx, 0.0, top) / top, 1.0 / hk) : zx;
  // Bisect along the longest side until every box is no larger than twice its
  // distance from x. Plain halving toward the nearest point leaves slivers
  // whose nodes straddle the kernel peak once the box is much larger than D.
  std::vector<double> px(d);
  for (int k = 0; k < d - 1; ++k) px[k] = x.tilde[k];
  px[d - 1] = zt;
  const double floor_dist = 1e-3 * std::max(zt, 1e-12);
  std::vector<Box> boxes, todo{b};
  while (!todo.empty()) {
    Box c = std::move(todo.back());
    todo.pop_back();
    int axis = 0;
    double size = 0.0, dist2 = 0.0;
    for (int k = 0; k < d; ++k) {
      if (c.hi[k] - c.lo[k] > size) {
        size = c.hi[k] - c.lo[k];
        axis = k;
      }
      const double gap = std::max({c.lo[k] - px[k], px[k] - c.hi[k], 0.0});
      dist2 += gap * gap;
    }
    if (size <= 2.0 * std::max(std::sqrt(dist2), floor_dist)) {
      boxes.push_back(std::move(c));
      continue;
    }
    Box other = c;
    const double mid = 0.5 * (c.lo[axis] + c.hi[axis]);
    c.hi[axis] = mid;
    other.lo[axis] = mid;
    todo.push_back(std::move(c));
    todo.push_back(std::move(other));
  }
  if (bx.lo[d - 1] == 0.0) {
    const int face_levels = std::clamp(static_cast<int>(std::ceil(std::log2(top / zx))) + 4, 10, 60);
    boxes = refine_toward_face(std::move(boxes), d - 1, 0.0, face_levels);
  }
  CubatureOptions co;
  co.rel_tol = tol;
  co.max_evals = 4'000'000;
  return cubature(f, std::move(boxes), co).value;
}

bool boxes_overlap_domain(const Box& b, const Grid& g) {
  for (int k = 0; k < g.d - 1; ++k) {
    const double lo = g.box.center_tilde[k] - g.box.half_width, hi = g.box.center_tilde[k] + g.box.half_width;
    if (b.hi[k] <= lo || b.lo[k] >= hi) return false;
  }
  return b.lo[g.d - 1] < g.box.height && b.hi[g.d - 1] > 0.0;
}

// Sum over the exterior pieces of D for a point x; g may be null.
double exterior_at(const Grid& gr, const BtildeKernel& kern, double alpha, const HalfSpacePoint& x,
                   const HalfSpaceField* g, std::optional<double> g_exp, bool grade_bottom, double tol) {
  const int d = gr.d;
  const double b = gr.box.height;
  Piece top;
  top.d = d;
  top.above = true;
  top.b = b;
  double total = piece_integral(top, kern, alpha, x, g, std::nullopt, false, tol);
  double delta[2][2];
  for (int k = 0; k < d - 1; ++k) {
    delta[k][0] = x.tilde[k] - (gr.box.center_tilde[k] - gr.box.half_width);  // towards -
    delta[k][1] = gr.box.center_tilde[k] + gr.box.half_width - x.tilde[k];    // towards +
  }
  for (int k = 0; k < d - 1; ++k) {
    for (int s = 0; s < 2; ++s) {
      Piece pc;
      pc.d = d;
      pc.b = b;
      pc.lateral_half[k] = true;
      pc.delta[k] = delta[k][s];
      pc.sigma[k] = s == 0 ? -1.0 : 1.0;
      total += piece_integral(pc, kern, alpha, x, g, g_exp, grade_bottom, tol);
    }
  }
  if (d == 3) {
    // the four half slabs overlap in corner quadrants, counted twice
    for (int s0 = 0; s0 < 2; ++s0) {
      for (int s1 = 0; s1 < 2; ++s1) {
        Piece pc;
        pc.d = 3;
        pc.b = b;
        pc.lateral_half[0] = pc.lateral_half[1] = true;
        pc.delta[0] = delta[0][s0];
        pc.delta[1] = delta[1][s1];
        pc.sigma[0] = s0 == 0 ? -1.0 : 1.0;
        pc.sigma[1] = s1 == 0 ? -1.0 : 1.0;
        total -= piece_integral(pc, kern, alpha, x, g, g_exp, grade_bottom, tol);
      }
    }
  }
  return total;
}

}  // namespace

// ---------------------------------------------------------------------------

AssembledOperator::AssembledOperator(std::shared_ptr<const Grid> grid, const ModelParams& params,
                                     const ConstantResult& c, const AssemblyOptions& opt)
    : grid_(std::move(grid)), params_(validate_params(params)) {
  const Grid& g = *grid_;
  if (g.d != params_.d) throw Error(ErrorCode::kDimensionMismatch, "grid and parameters differ in dimension");
  if (!(c.value > 0.0)) throw Error(ErrorCode::kPrecondition, "killing constant must be positive");
  if (opt.pv_radius_cells < 0) throw Error(ErrorCode::kPrecondition, "pv_radius_cells must be >= 0");
  kappa_.resize(g.size());
  for (int i = 0; i < g.size(); ++i) kappa_[i] = kappa_eval(g.z_center[g.row(i)], params_.alpha, c.value);
  lat_slots_ = g.d == 2 ? g.lateral_n : g.lateral_n * (g.lateral_n + 1) / 2;
  build_table(opt);
  build_exterior(opt);
}

int AssembledOperator::table_index(int i, int j) const {
  const Grid& g = *grid_;
  const int ci = g.column(i), cj = g.column(j);
  int slot;
  if (g.d == 2) {
    slot = std::abs(ci - cj);
  } else {
    const int p = std::abs(g.lateral_index(ci, 0) - g.lateral_index(cj, 0));
    const int q = std::abs(g.lateral_index(ci, 1) - g.lateral_index(cj, 1));
    slot = slot_of(3, p, q);
  }
  return (slot * g.vertical_n + g.row(i)) * g.vertical_n + g.row(j);
}

double AssembledOperator::symmetric_entry(int i, int j) const {
  if (i == j) return diag_[i];
  return -table_[table_index(i, j)];
}

bool AssembledOperator::is_midpoint_pair(int i, int j) const {
  if (i == j) return false;
  const int t = table_index(i, j);
  return midpoint_[t] != 0;
}

void AssembledOperator::build_table(const AssemblyOptions& opt) {
  const Grid& g = *grid_;
  const int d = g.d, nv = g.vertical_n, nl = g.lateral_n;
  const double h = g.lateral_h;
  const BtildeKernel kern(params_);
  // representative lateral offsets of each slot
  std::vector<std::array<int, 2>> offs(lat_slots_);
  if (d == 2) {
    for (int p = 0; p < nl; ++p) offs[p] = {p, 0};
  } else {
    for (int p = 0; p < nl; ++p)
      for (int q = 0; q <= p; ++q) offs[slot_of(3, p, q)] = {p, q};
  }
  const long cells = static_cast<long>(lat_slots_) * nv * nv;
  std::vector<double> directed(cells, 0.0);
  std::vector<unsigned char> midpoint(cells, 0);
  const double far2 = opt.far_ratio * opt.far_ratio;
  parallel_for(static_cast<long>(lat_slots_) * nv, opt.threads, [&](long task) {
    const int slot = static_cast<int>(task / nv), ri = static_cast<int>(task % nv);
    const double zx = g.z_center[ri];
    const CellIntegrator integ(kern, d, zx);
    const auto& o = offs[slot];
    for (int rj = 0; rj < nv; ++rj) {
      if (slot == 0 && rj == ri) continue;
      double lo[3], hi[3];
      for (int k = 0; k < d - 1; ++k) {
        lo[k] = (o[k] - 0.5) * h;
        hi[k] = (o[k] + 0.5) * h;
      }
      lo[d - 1] = g.z_breaks[rj];
      hi[d - 1] = g.z_breaks[rj + 1];
      double dist2 = 0.0, diam2 = 0.0;
      for (int a = 0; a < d; ++a) {
        const double c = a == d - 1 ? zx : 0.0;
        const double gap = c < lo[a] ? lo[a] - c : (c > hi[a] ? c - hi[a] : 0.0);
        dist2 += gap * gap;
        diam2 += (hi[a] - lo[a]) * (hi[a] - lo[a]);
      }
      const int idx_dist = std::max({o[0], o[1], std::abs(ri - rj)});
      const long t = (static_cast<long>(slot) * nv + ri) * nv + rj;
      if (idx_dist > opt.pv_radius_cells && dist2 >= far2 * diam2) {
        double lat2 = 0.0;
        for (int k = 0; k < d - 1; ++k) lat2 += (o[k] * h) * (o[k] * h);
        const double zy = g.z_center[rj], dz = zy - zx;
        directed[t] = kern.jump(std::min(zx, zy), std::max(zx, zy), std::sqrt(lat2 + dz * dz)) * g.row_volume(rj);
        midpoint[t] = 1;
      } else {
        directed[t] = integ(lo, hi);
      }
    }
  });

  // own-cell second moments, turned into second-difference stencils
  std::vector<std::array<double, 2>> mom(nv);
  parallel_for(nv, opt.threads, [&](long r) {
    mom[r] = own_cell_moments(kern, d, params_.alpha, g.z_center[r], h, g.z_height[r], opt.quad_tol);
  });
  lateral_coef_.assign(nv, 0.0);
  up_coef_.assign(nv, 0.0);
  down_coef_.assign(nv, 0.0);
  for (int r = 0; r < nv; ++r) {
    lateral_coef_[r] = 0.5 * mom[r][0] / (h * h);
    const double hp = r + 1 < nv ? g.z_center[r + 1] - g.z_center[r] : g.z_height[r];
    const double hm = r > 0 ? g.z_center[r] - g.z_center[r - 1] : g.z_center[0];
    up_coef_[r] = 0.5 * mom[r][1] * 2.0 / (hp * (hp + hm));
    down_coef_[r] = 0.5 * mom[r][1] * 2.0 / (hm * (hp + hm));
  }

  table_.assign(cells, 0.0);
  midpoint_.assign(cells, 0);
  for (int slot = 0; slot < lat_slots_; ++slot) {
    for (int ri = 0; ri < nv; ++ri) {
      for (int rj = 0; rj < nv; ++rj) {
        const long t = (static_cast<long>(slot) * nv + ri) * nv + rj;
        const long tt = (static_cast<long>(slot) * nv + rj) * nv + ri;
        table_[t] = 0.5 * (g.row_volume(ri) * directed[t] + g.row_volume(rj) * directed[tt]);
        midpoint_[t] = midpoint[t] && midpoint[tt];
      }
    }
  }
  for (int r = 0; r < nv; ++r) {
    // lateral neighbours: slot 1 in both d = 2 and d = 3
    table_[(static_cast<long>(1) * nv + r) * nv + r] += g.row_volume(r) * lateral_coef_[r];
    if (r + 1 < nv) {
      const double add = 0.5 * (g.row_volume(r) * up_coef_[r] + g.row_volume(r + 1) * down_coef_[r + 1]);
      table_[static_cast<long>(r) * nv + r + 1] += add;
      table_[static_cast<long>(r + 1) * nv + r] += add;
    }
  }
}

void AssembledOperator::build_exterior(const AssemblyOptions& opt) {
  const Grid& g = *grid_;
  const int d = g.d, nv = g.vertical_n, nl = g.lateral_n;
  const double h = g.lateral_h, b = g.box.height;
  const BtildeKernel kern(params_);
  const double alpha = params_.alpha;
  const bool grade = params_.beta[0] > 0.0 || params_.beta[2] > 0.0;
  // translation-invariant pieces: top(row), half(delta index, row), quad(pair, row)
  std::vector<double> top(nv), half(static_cast<long>(nl) * nv);
  const int quads = d == 3 ? nl * (nl + 1) / 2 : 0;
  std::vector<double> quad(static_cast<long>(quads) * nv);
  const auto origin = [&](int r) { return HalfSpacePoint(std::vector<double>(d - 1, 0.0), g.z_center[r]); };
  parallel_for(nv, opt.threads, [&](long r) {
    Piece pc;
    pc.d = d;
    pc.above = true;
    pc.b = b;
    top[r] = piece_integral(pc, kern, alpha, origin(static_cast<int>(r)), nullptr, std::nullopt, false, opt.quad_tol);
  });
  parallel_for(static_cast<long>(nl) * nv, opt.threads, [&](long t) {
    const int k = static_cast<int>(t / nv), r = static_cast<int>(t % nv);
    Piece pc;
    pc.d = d;
    pc.b = b;
    pc.lateral_half[0] = true;
    pc.delta[0] = (k + 0.5) * h;
    half[t] = piece_integral(pc, kern, alpha, origin(r), nullptr, std::nullopt, grade, opt.quad_tol);
  });
  if (d == 3) {
    parallel_for(static_cast<long>(quads) * nv, opt.threads, [&](long t) {
      const int s = static_cast<int>(t / nv), r = static_cast<int>(t % nv);
      int p = 0;
      while ((p + 1) * (p + 2) / 2 <= s) ++p;
      const int q = s - p * (p + 1) / 2;
      Piece pc;
      pc.d = 3;
      pc.b = b;
      pc.lateral_half[0] = pc.lateral_half[1] = true;
      pc.delta[0] = (p + 0.5) * h;
      pc.delta[1] = (q + 0.5) * h;
      quad[t] = piece_integral(pc, kern, alpha, origin(r), nullptr, std::nullopt, grade, opt.quad_tol);
    });
  }
  const int n = g.size();
  ext_.assign(n, 0.0);
  std::vector<double> ghost(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const int c = g.column(i), r = g.row(i);
    double e = top[r];
    int lat[2];
    for (int k = 0; k < d - 1; ++k) {
      lat[k] = g.lateral_index(c, k);
      e += half[static_cast<long>(lat[k]) * nv + r] + half[static_cast<long>(nl - 1 - lat[k]) * nv + r];
      ghost[i] += lateral_coef_[r] * ((lat[k] == 0) + (lat[k] == nl - 1));
    }
    if (d == 3) {
      for (int s0 = 0; s0 < 2; ++s0)
        for (int s1 = 0; s1 < 2; ++s1) {
          const int p = s0 == 0 ? lat[0] : nl - 1 - lat[0];
          const int q = s1 == 0 ? lat[1] : nl - 1 - lat[1];
          e -= quad[static_cast<long>(slot_of(3, p, q)) * nv + r];
        }
    }
    ext_[i] = e;
    if (r == 0) ghost[i] += down_coef_[r];
    if (r == nv - 1) ghost[i] += up_coef_[r];
  }
  // S_ii = vol_i (kappa + ext + ghost) + sum_j |S_ij|
  diag_.assign(n, 0.0);
  parallel_for(n, opt.threads, [&](long i) {
    const int ii = static_cast<int>(i);
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != ii) s += table_[table_index(ii, j)];
    diag_[i] = g.volume(ii) * (kappa_[i] + ext_[i] + ghost[i]) + s;
  });
}

std::vector<double> AssembledOperator::apply(const std::vector<double>& u) const {
  const int n = size();
  if (static_cast<int>(u.size()) != n) throw Error(ErrorCode::kDimensionMismatch, "vector length differs from grid");
  const Grid& g = *grid_;
  const int nv = g.vertical_n, cols = g.columns();
  std::vector<double> out(n);
  parallel_for(n, 0, [&](long i) {
    const int ii = static_cast<int>(i);
    const int ri = g.row(ii);
    double s = diag_[i] * u[i];
    for (int c = 0; c < cols; ++c) {
      const int base = c * nv;
      const double* t = &table_[table_index(ii, base)];
      double acc = 0.0;
      for (int r = 0; r < nv; ++r) acc += t[r] * u[base + r];
      if (base + ri == ii) acc -= t[ri] * u[ii];
      s -= acc;
    }
    out[i] = s / g.volume(ii);
  });
  return out;
}

void AssembledOperator::factorize() const {
  const int n = size();
  auto m = std::make_unique<Eigen::MatrixXd>(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) (*m)(i, j) = symmetric_entry(i, j);
  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(*m);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kSolverFailure, "Cholesky factorization failed");
  factor_ = std::move(m);
}

std::vector<double> AssembledOperator::solve(const std::vector<double>& f) const {
  const int n = size();
  if (static_cast<int>(f.size()) != n) throw Error(ErrorCode::kDimensionMismatch, "vector length differs from grid");
  double fmax = 0.0;
  for (double v : f) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kPrecondition, "right-hand side is not finite");
    fmax = std::max(fmax, std::abs(v));
  }
  if (fmax == 0.0) {
    last_residual_ = 0.0;
    return std::vector<double>(n, 0.0);
  }
  std::call_once(factor_once_, [this] { factorize(); });
  const auto L = factor_->triangularView<Eigen::Lower>();
  const auto back = [&](Eigen::VectorXd v) {
    L.solveInPlace(v);
    L.adjoint().solveInPlace(v);
    return v;
  };
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  std::vector<double> uv(n, 0.0);
  double rel = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 4; ++it) {
    const std::vector<double> au = apply(uv);
    Eigen::VectorXd r(n);
    rel = 0.0;
    for (int i = 0; i < n; ++i) {
      r[i] = (f[i] - au[i]) * grid_->volume(i);
      rel = std::max(rel, std::abs(f[i] - au[i]));
    }
    rel /= fmax;
    if (rel <= 1e-13) break;
    u += back(std::move(r));
    for (int i = 0; i < n; ++i) uv[i] = u[i];
  }
  {
    const std::vector<double> au = apply(uv);
    rel = 0.0;
    for (int i = 0; i < n; ++i) rel = std::max(rel, std::abs(f[i] - au[i]));
    rel /= fmax;
  }
  last_residual_ = rel;
  if (rel > 1e-10) throw Error(ErrorCode::kSolverFailure, "residual above 1e-10 relative after refinement");
  return uv;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const AssembledOperator> assemble_operator(const Grid& grid, const ModelParams& params,
                                                           const ConstantResult& c, int pv_radius_cells,
                                                           const AssemblyOptions& opt) {
  AssemblyOptions o = opt;
  o.pv_radius_cells = pv_radius_cells;
  return std::make_shared<const AssembledOperator>(std::make_shared<const Grid>(grid), params, c, o);
}

GridFunction grid_function(const AssembledOperator& a, std::vector<double> values) {
  if (static_cast<int>(values.size()) != a.size())
    throw Error(ErrorCode::kDimensionMismatch, "values do not match the grid");
  return GridFunction{a.grid_ptr(), std::move(values)};
}

GridFunction solve_potential(const AssembledOperator& a, const GridFunction& f) {
  return grid_function(a, a.solve(f.values));
}

GridFunction green_column(const AssembledOperator& a, int y_cell) {
  if (y_cell < 0 || y_cell >= a.size()) throw Error(ErrorCode::kPrecondition, "cell index out of range");
  std::vector<double> f(a.size(), 0.0);
  f[y_cell] = 1.0 / a.grid().volume(y_cell);
  return grid_function(a, a.solve(f));
}

GridFunction killed_potential(const AssembledOperator& a, double gamma) {
  const Grid& g = a.grid();
  std::vector<double> row_value(g.vertical_n);
  for (int r = 0; r < g.vertical_n; ++r) {
    const double lo = g.z_breaks[r], hi = g.z_breaks[r + 1];
    if (gamma < 0.0 && gamma > -1.0) {
      row_value[r] = (std::pow(hi, gamma + 1.0) - std::pow(lo, gamma + 1.0)) / ((gamma + 1.0) * (hi - lo));
    } else {
      row_value[r] = std::pow(g.z_center[r], gamma);
    }
  }
  std::vector<double> f(g.size());
  for (int i = 0; i < g.size(); ++i) f[i] = row_value[g.row(i)];
  return grid_function(a, a.solve(f));
}

ExteriorData ExteriorData::uniform(double c) {
  ExteriorData e;
  e.constant = c;
  return e;
}

ExteriorData ExteriorData::indicator(std::vector<Box> target) {
  ExteriorData e;
  e.g = [](const HalfSpacePoint&) { return 1.0; };
  e.support = std::move(target);
  return e;
}

std::vector<double> exterior_source(const AssembledOperator& a, const ExteriorData& data, double rel_tol,
                                    int threads) {
  const Grid& g = a.grid();
  const int n = a.size();
  if (data.constant) {
    if (!(*data.constant >= 0.0)) throw Error(ErrorCode::kPrecondition, "exterior data must be >= 0");
    std::vector<double> s(a.exterior_kill());
    for (double& v : s) v *= *data.constant;
    return s;
  }
  if (!data.g) throw Error(ErrorCode::kPrecondition, "exterior data has neither a constant nor a field");
  for (const Box& b : data.support) {
    if (b.dim() != g.d) throw Error(ErrorCode::kDimensionMismatch, "support box dimension differs from grid");
    if (boxes_overlap_domain(b, g)) throw Error(ErrorCode::kPrecondition, "exterior support meets the domain");
    if (!(b.lo[g.d - 1] >= 0.0)) throw Error(ErrorCode::kPrecondition, "support must lie in the half-space");
  }
  const BtildeKernel kern(a.params());
  std::vector<double> s(n, 0.0);
  parallel_for(n, threads, [&](long i) {
    const HalfSpacePoint x = g.center(static_cast<int>(i));
    double v = 0.0;
    if (data.support.empty()) {
      v = exterior_at(g, kern, a.params().alpha, x, &data.g, data.boundary_exponent, true, rel_tol);
    } else {
      for (const Box& b : data.support) v += box_source(b, kern, x, data.g, data.boundary_exponent, rel_tol);
    }
    if (!std::isfinite(v)) throw Error(ErrorCode::kQuadratureFailure, "exterior integral diverges");
    s[i] = v;
  });
  return s;
}

GridFunction harmonic_extension(const AssembledOperator& a, const ExteriorData& data) {
  return grid_function(a, a.solve(exterior_source(a, data)));
}

GridFunction exit_probability(const AssembledOperator& a, const std::vector<Box>& target) {
  if (target.empty()) throw Error(ErrorCode::kPrecondition, "exit target is empty");
  return harmonic_extension(a, ExteriorData::indicator(target));
}

}  // namespace gfd
