#include "gfd/grid.hpp"

#include <algorithm>
#include <cmath>

namespace gfd {

double Grid::lateral_center(int c, int k) const {
  const int idx = lateral_index(c, k);
  return box.center_tilde[k] - box.half_width + (idx + 0.5) * lateral_h;
}

HalfSpacePoint Grid::center(int i) const {
  const int c = column(i);
  std::vector<double> t(d - 1);
  for (int k = 0; k < d - 1; ++k) t[k] = lateral_center(c, k);
  return HalfSpacePoint(std::move(t), z_center[row(i)]);
}

double Grid::row_volume(int r) const { return std::pow(lateral_h, d - 1) * z_height[r]; }

double Grid::volume(int i) const { return row_volume(row(i)); }

int Grid::locate(const HalfSpacePoint& x) const {
  if (x.dim() != d) throw Error(ErrorCode::kDimensionMismatch, "point dimension differs from grid");
  int lat[2] = {0, 0};
  for (int k = 0; k < d - 1; ++k) {
    const double s = (x.tilde[k] - box.center_tilde[k] + box.half_width) / lateral_h;
    lat[k] = std::clamp(static_cast<int>(std::floor(s)), 0, lateral_n - 1);
  }
  const auto it = std::upper_bound(z_breaks.begin(), z_breaks.end(), x.xd);
  const int r = std::clamp(static_cast<int>(it - z_breaks.begin()) - 1, 0, vertical_n - 1);
  return index(lat[0], lat[1], r);
}

std::vector<int> Grid::vertical_line(const std::vector<double>& tilde) const {
  const int base = locate(HalfSpacePoint(tilde, z_center[0]));
  std::vector<int> out(vertical_n);
  for (int r = 0; r < vertical_n; ++r) out[r] = base + r;
  return out;
}

Grid build_grid(const BoxRegion& box, int lateral_n, int vertical_n, double grading) {
  const int d = box.dim();
  if (d != 2 && d != 3) throw Error(ErrorCode::kDimensionMismatch, "grids exist for d = 2 and d = 3 only");
  if (!(box.half_width > 0.0 && box.height > 0.0)) throw Error(ErrorCode::kDegenerateRegion, "box has no interior");
  if (lateral_n < 4 || vertical_n < 4) throw Error(ErrorCode::kPrecondition, "grids need at least 4 cells per axis");
  if (!(grading > 1.0 && grading <= 2.0)) throw Error(ErrorCode::kPrecondition, "grading must lie in (1, 2]");
  Grid g;
  g.d = d;
  g.box = box;
  g.lateral_n = lateral_n;
  g.vertical_n = vertical_n;
  g.grading = grading;
  g.lateral_h = 2.0 * box.half_width / lateral_n;
  // (g^n - 1)/(g - 1) without cancellation for g close to 1
  const double lg = std::log1p(grading - 1.0);
  g.z_breaks.resize(vertical_n + 1);
  g.z_breaks[0] = 0.0;
  for (int r = 0; r < vertical_n; ++r) {
    // partial sums in closed form keep the heights monotone to rounding
    g.z_breaks[r + 1] = box.height * std::expm1((r + 1) * lg) / std::expm1(vertical_n * lg);
  }
  g.z_breaks[vertical_n] = box.height;
  g.z_center.resize(vertical_n);
  g.z_height.resize(vertical_n);
  for (int r = 0; r < vertical_n; ++r) {
    g.z_height[r] = g.z_breaks[r + 1] - g.z_breaks[r];
    g.z_center[r] = 0.5 * (g.z_breaks[r] + g.z_breaks[r + 1]);
  }
  return g;
}

}  // namespace gfd
