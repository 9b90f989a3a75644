#pragma once

#include <vector>

#include "gfd/model_params.hpp"

namespace gfd {

/// Cell partition of a box D = center + [-a,a]^{d-1} x (0,b). Lateral cells are
/// uniform; vertical cells grow geometrically away from x_d = 0. In d = 3 the
/// lateral section is the square of half-side a.
///
/// Cell index: column-major over lateral columns, row fastest,
///   i = (c1 + n_lat * c2) * n_vert + row.
struct Grid {
  int d = 2;
  BoxRegion box;
  int lateral_n = 0;
  int vertical_n = 0;
  double grading = 1.0;
  double lateral_h = 0.0;
  std::vector<double> z_breaks;  // vertical_n + 1 values, 0 .. b
  std::vector<double> z_center;  // midpoints
  std::vector<double> z_height;

  int columns() const { return d == 2 ? lateral_n : lateral_n * lateral_n; }
  int size() const { return columns() * vertical_n; }
  int row(int i) const { return i % vertical_n; }
  int column(int i) const { return i / vertical_n; }
  /// Lateral cell coordinate along axis k (0 or 1) of column c.
  int lateral_index(int c, int k) const { return k == 0 ? c % lateral_n : c / lateral_n; }
  int index(int c1, int c2, int r) const { return (c1 + lateral_n * c2) * vertical_n + r; }

  double lateral_center(int c, int k) const;
  HalfSpacePoint center(int i) const;
  double volume(int i) const;
  double row_volume(int r) const;
  /// Cell nearest to a point (clamped into D).
  int locate(const HalfSpacePoint& x) const;
  /// Cells of the vertical line through the lateral cell closest to x~.
  std::vector<int> vertical_line(const std::vector<double>& tilde) const;
};

/// Geometric vertical partition: the bottom cell has height
/// b (g-1)/(g^n - 1) and each next one is g times taller.
Grid build_grid(const BoxRegion& box, int lateral_n, int vertical_n, double grading);

}  // namespace gfd
