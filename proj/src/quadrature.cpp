#include "gfd/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "gfd/error.hpp"

namespace gfd {

double Box::volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < lo.size(); ++k) v *= hi[k] - lo[k];
  return v;
}

namespace {

struct RuleResult {
  double value = 0.0;
  double error = 0.0;
  int split_axis = 0;
};

// Genz-Malik degree 7 with embedded degree 5.
class GenzMalik {
 public:
  explicit GenzMalik(int n) : n_(n), x_(n) {
    const double dn = n;
    w1_ = (12824.0 - 9120.0 * dn + 400.0 * dn * dn) / 19683.0;
    w2_ = 980.0 / 6561.0;
    w3_ = (1820.0 - 400.0 * dn) / 19683.0;
    w4_ = 200.0 / 19683.0;
    w5_ = 6859.0 / 19683.0 / std::ldexp(1.0, n);
    v1_ = (729.0 - 950.0 * dn + 50.0 * dn * dn) / 729.0;
    v2_ = 245.0 / 486.0;
    v3_ = (265.0 - 100.0 * dn) / 1458.0;
    v4_ = 25.0 / 729.0;
  }

  int nodes() const { return 1 + 4 * n_ + 2 * n_ * (n_ - 1) + (1 << n_); }

  RuleResult apply(const Field& f, const Box& b) {
    const double l2 = std::sqrt(9.0 / 70.0), l3 = std::sqrt(9.0 / 10.0), l4 = l3, l5 = std::sqrt(9.0 / 19.0);
    std::vector<double> c(n_), h(n_);
    double vol = 1.0;
    for (int k = 0; k < n_; ++k) {
      c[k] = 0.5 * (b.lo[k] + b.hi[k]);
      h[k] = 0.5 * (b.hi[k] - b.lo[k]);
      vol *= b.hi[k] - b.lo[k];
    }
    const auto eval = [&](const std::vector<double>& p) {
      const double v = f(p.data());
      if (!std::isfinite(v)) throw Error(ErrorCode::kQuadratureFailure, "integrand is not finite at a node");
      return v;
    };
    x_ = c;
    const double f0 = eval(x_);
    double s2 = 0.0, s3 = 0.0, s4 = 0.0, s5 = 0.0;
    double best = -1.0;
    int axis = 0;
    for (int i = 0; i < n_; ++i) {
      x_[i] = c[i] + l2 * h[i];
      const double a2p = eval(x_);
      x_[i] = c[i] - l2 * h[i];
      const double a2m = eval(x_);
      x_[i] = c[i] + l3 * h[i];
      const double a3p = eval(x_);
      x_[i] = c[i] - l3 * h[i];
      const double a3m = eval(x_);
      x_[i] = c[i];
      s2 += a2p + a2m;
      s3 += a3p + a3m;
      const double diff = std::abs(a2p + a2m - 2.0 * f0 - (l2 * l2) / (l3 * l3) * (a3p + a3m - 2.0 * f0));
      // ties go to the widest side so that slabs do not stay slabs forever
      if (diff > best * (1.0 + 1e-12) || (diff >= best * (1.0 - 1e-12) && h[i] > h[axis])) {
        best = diff;
        axis = i;
      }
    }
    for (int i = 0; i < n_; ++i) {
      for (int j = i + 1; j < n_; ++j) {
        for (int si = -1; si <= 1; si += 2) {
          for (int sj = -1; sj <= 1; sj += 2) {
            x_[i] = c[i] + si * l4 * h[i];
            x_[j] = c[j] + sj * l4 * h[j];
            s4 += eval(x_);
          }
        }
        x_[i] = c[i];
        x_[j] = c[j];
      }
    }
    for (unsigned mask = 0; mask < (1u << n_); ++mask) {
      for (int k = 0; k < n_; ++k) x_[k] = c[k] + ((mask >> k) & 1u ? l5 : -l5) * h[k];
      s5 += eval(x_);
    }
    const double r7 = vol * (w1_ * f0 + w2_ * s2 + w3_ * s3 + w4_ * s4 + w5_ * s5);
    const double r5 = vol * (v1_ * f0 + v2_ * s2 + v3_ * s3 + v4_ * s4);
    return {r7, std::abs(r7 - r5), axis};
  }

 private:
  int n_;
  std::vector<double> x_;
  double w1_, w2_, w3_, w4_, w5_, v1_, v2_, v3_, v4_;
};

RuleResult kronrod15(const Field& f, const Box& b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  double err = 0.0;
  const auto g = [&](double t) {
    const double v = f(&t);
    if (!std::isfinite(v)) throw Error(ErrorCode::kQuadratureFailure, "integrand is not finite at a node");
    return v;
  };
  const double v = GK::integrate(g, b.lo[0], b.hi[0], 0, 0.0, &err);
  return {v, err, 0};
}

struct Region {
  Box box;
  RuleResult r;
  bool operator<(const Region& o) const { return r.error < o.r.error; }
};

std::vector<Box> split_at(const std::vector<Box>& boxes, int axis, double value) {
  std::vector<Box> out;
  out.reserve(boxes.size() + 4);
  for (const Box& b : boxes) {
    if (b.lo[axis] < value && value < b.hi[axis]) {
      Box l = b, r = b;
      l.hi[axis] = value;
      r.lo[axis] = value;
      out.push_back(std::move(l));
      out.push_back(std::move(r));
    } else {
      out.push_back(b);
    }
  }
  return out;
}

}  // namespace

QuadResult cubature(const Field& f, std::vector<Box> boxes, const CubatureOptions& opt, bool allow_budget_exit) {
  if (boxes.empty()) return {};
  const int n = boxes.front().dim();
  GenzMalik gm(n >= 2 ? n : 2);
  const int per_box = n >= 2 ? gm.nodes() : 15;
  const auto rule = [&](const Box& b) { return n >= 2 ? gm.apply(f, b) : kronrod15(f, b); };

  std::priority_queue<Region> heap;
  QuadResult out;
  double total = 0.0, total_err = 0.0;
  for (Box& b : boxes) {
    if (!(b.volume() > 0.0)) continue;
    Region r{std::move(b), {}};
    r.r = rule(r.box);
    out.nodes += per_box;
    total += r.r.value;
    total_err += r.r.error;
    heap.push(std::move(r));
  }
  bool budget_hit = false;
  std::vector<Region> frozen;
  while (!heap.empty()) {
    if (total_err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) break;
    if (out.nodes + 2 * per_box > opt.max_evals) {
      budget_hit = true;
      break;
    }
    Region top = heap.top();
    heap.pop();
    const int ax = top.r.split_axis;
    const double mid = 0.5 * (top.box.lo[ax] + top.box.hi[ax]);
    if (top.box.hi[ax] - top.box.lo[ax] <= 256.0 * std::numeric_limits<double>::epsilon() * std::abs(mid)) {
      // resolution exhausted next to a singularity: keep the estimate as is
      frozen.push_back(std::move(top));
      continue;
    }
    Region a{top.box, {}}, b{top.box, {}};
    a.box.hi[ax] = mid;
    b.box.lo[ax] = mid;
    a.r = rule(a.box);
    b.r = rule(b.box);
    out.nodes += 2 * per_box;
    total += a.r.value + b.r.value - top.r.value;
    total_err += a.r.error + b.r.error - top.r.error;
    heap.push(std::move(a));
    heap.push(std::move(b));
  }
  // fresh sums: the running totals drift after many updates
  total = 0.0;
  total_err = 0.0;
  for (const Region& r : frozen) {
    total += r.r.value;
    total_err += r.r.error;
  }
  while (!heap.empty()) {
    total += heap.top().r.value;
    total_err += heap.top().r.error;
    heap.pop();
  }
  out.value = total;
  out.abs_error_estimate = total_err;
  if (budget_hit && !allow_budget_exit && total_err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total)))
    throw Error(ErrorCode::kQuadratureFailure, "cubature node budget exhausted before tolerance");
  return out;
}

std::vector<Box> refine_toward_face(std::vector<Box> boxes, int axis, double value, int levels) {
  boxes = split_at(boxes, axis, value);
  for (int lev = 0; lev < levels; ++lev) {
    std::vector<Box> out;
    out.reserve(boxes.size() + 8);
    for (Box& b : boxes) {
      if (b.lo[axis] == value || b.hi[axis] == value) {
        const double mid = 0.5 * (b.lo[axis] + b.hi[axis]);
        Box near = b, far = b;
        if (b.lo[axis] == value) {
          near.hi[axis] = mid;
          far.lo[axis] = mid;
        } else {
          near.lo[axis] = mid;
          far.hi[axis] = mid;
        }
        out.push_back(std::move(near));
        out.push_back(std::move(far));
      } else {
        out.push_back(std::move(b));
      }
    }
    boxes = std::move(out);
  }
  return boxes;
}

std::vector<Box> refine_toward_point(std::vector<Box> boxes, const std::vector<double>& point, int levels) {
  const int n = static_cast<int>(point.size());
  for (int k = 0; k < n; ++k) boxes = split_at(boxes, k, point[k]);
  const auto is_vertex = [&](const Box& b) {
    for (int k = 0; k < n; ++k)
      if (!(b.lo[k] == point[k] || b.hi[k] == point[k])) return false;
    return true;
  };
  for (int lev = 0; lev < levels; ++lev) {
    std::vector<Box> out;
    out.reserve(boxes.size() + 16);
    for (Box& b : boxes) {
      if (!is_vertex(b)) {
        out.push_back(std::move(b));
        continue;
      }
      std::vector<Box> parts{b};
      for (int k = 0; k < n; ++k) parts = split_at(parts, k, 0.5 * (b.lo[k] + b.hi[k]));
      for (Box& q : parts) out.push_back(std::move(q));
    }
    boxes = std::move(out);
  }
  return boxes;
}

std::vector<double> graded_breaks(double a, double b, int n, double ratio) {
  if (n < 1 || !(b > a) || !(ratio > 0.0)) throw Error(ErrorCode::kPrecondition, "graded_breaks needs n >= 1, b > a");
  std::vector<double> out(n + 1);
  // cell k has width h r^k; sum = (b-a)
  const double total = ratio == 1.0 ? n : (std::pow(ratio, n) - 1.0) / (ratio - 1.0);
  const double h = (b - a) / total;
  out[0] = a;
  double w = h;
  for (int k = 1; k < n; ++k) {
    out[k] = out[k - 1] + w;
    w *= ratio;
  }
  out[n] = b;
  return out;
}

QuadResult integrate_1d(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  QuadResult out;
  if (!(b > a)) return out;
  long count = 0;
  const auto g = [&](double t) {
    ++count;
    const double v = f(t);
    return std::isfinite(v) ? v : 0.0;
  };
  static thread_local boost::math::quadrature::tanh_sinh<double> ts(12);
  double err = 0.0, l1 = 0.0;
  out.value = ts.integrate(g, a, b, rel_tol, &err, &l1);
  out.abs_error_estimate = err;
  out.nodes = count;
  return out;
}

}  // namespace gfd
