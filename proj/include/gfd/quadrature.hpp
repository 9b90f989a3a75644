#pragma once

#include <functional>
#include <vector>

namespace gfd {

struct QuadResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  long nodes = 0;
};

/// Axis-aligned box [lo, hi] in R^n.
struct Box {
  std::vector<double> lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const;
};

using Field = std::function<double(const double*)>;

struct CubatureOptions {
  double rel_tol = 1e-8;
  double abs_tol = 0.0;
  long max_evals = 20'000'000;
};

/// Globally adaptive cubature over a union of boxes with disjoint interiors.
/// Uses the degree-7 Genz-Malik rule with its degree-5 embedded companion
/// (n >= 2) or 15-point Gauss-Kronrod (n = 1), always bisecting the box with
/// the largest error estimate. Throws kQuadratureFailure when max_evals is
/// spent before the tolerance max(abs_tol, rel_tol*|I|) is met, unless
/// allow_budget_exit is set, in which case the best estimate is returned.
QuadResult cubature(const Field& f, std::vector<Box> boxes, const CubatureOptions& opt,
                    bool allow_budget_exit = false);

/// Splits every box that meets the hyperplane x[axis] = value so that the
/// plane is a face, then refines geometrically (ratio 1/2) towards it for the
/// given number of levels. Use for edge singularities such as y_d^gamma.
std::vector<Box> refine_toward_face(std::vector<Box> boxes, int axis, double value, int levels);

/// Splits so that the point is a vertex, then halves the boxes having it as a
/// vertex, levels times. Use for isolated point singularities.
std::vector<Box> refine_toward_point(std::vector<Box> boxes, const std::vector<double>& point, int levels);

/// Breakpoints on [a, b] geometrically graded towards a: a, a + h, a + h r, ...
/// with n cells and ratio r > 0 (r = 1 gives uniform cells).
std::vector<double> graded_breaks(double a, double b, int n, double ratio);

/// Adaptive 1-D integral with the singular end(s) handled by the
/// double-exponential rule. Finite interval only.
QuadResult integrate_1d(const std::function<double(double)>& f, double a, double b, double rel_tol);

}  // namespace gfd
