#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gfd/grid.hpp"
#include "gfd/kernel.hpp"
#include "gfd/quad_oracle.hpp"
#include "gfd/quadrature.hpp"

namespace gfd {

struct GridFunction {
  std::shared_ptr<const Grid> grid;
  std::vector<double> values;

  double operator[](int i) const { return values[i]; }
  int size() const { return static_cast<int>(values.size()); }
};

struct AssemblyOptions {
  /// Cells within this index distance are always coupled through
  /// cell-integrated kernel values.
  int pv_radius_cells = 2;
  /// Beyond pv_radius_cells, a cell whose distance from the collocation point
  /// exceeds far_ratio times its diameter is coupled by the midpoint value
  /// J(x_i, x_j) vol_j.
  double far_ratio = 8.0;
  /// Relative tolerance of the exterior-kill and moment quadratures.
  double quad_tol = 1e-7;
  /// 0 = hardware concurrency.
  int threads = 0;
};

/// Discrete generator of the killed process on a grid. Stores the symmetric
/// volume-weighted matrix S = V A, with A u = f meaning S u = V f, in a
/// translation-invariant table, so entries are cheap to recompute. The
/// Cholesky factor is built lazily in place on first solve.
class AssembledOperator {
 public:
  AssembledOperator(std::shared_ptr<const Grid> grid, const ModelParams& params, const ConstantResult& c,
                    const AssemblyOptions& opt);

  const Grid& grid() const { return *grid_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  const ModelParams& params() const { return params_; }
  int size() const { return grid_->size(); }

  /// Symmetric entry S_ij.
  double symmetric_entry(int i, int j) const;
  /// Generator entry A_ij = S_ij / vol_i.
  double entry(int i, int j) const { return symmetric_entry(i, j) / grid_->volume(i); }
  /// A u
  std::vector<double> apply(const std::vector<double>& u) const;

  /// kappa(x_i) at the cell centre.
  const std::vector<double>& kappa() const { return kappa_; }
  /// int_{H \ D} J(x_i, y) dy
  const std::vector<double>& exterior_kill() const { return ext_; }
  /// True when S_ij = vol_i vol_j J(x_i, x_j), i.e. the pair is far enough
  /// apart for midpoint coupling in both directions.
  bool is_midpoint_pair(int i, int j) const;

  /// Solves A u = f by Cholesky with iterative refinement. Throws
  /// kSolverFailure when the residual contract 1e-10 ||f||_inf is missed.
  std::vector<double> solve(const std::vector<double>& f) const;
  /// ||A u - f||_inf / ||f||_inf of the last solve.
  double last_relative_residual() const { return last_residual_; }

 private:
  int table_index(int i, int j) const;
  void build_table(const AssemblyOptions& opt);
  void build_exterior(const AssemblyOptions& opt);
  void factorize() const;

  std::shared_ptr<const Grid> grid_;
  ModelParams params_;
  int lat_slots_ = 0;           // distinct lateral offsets
  std::vector<double> table_;   // -S_ij for offsets, rows
  std::vector<double> diag_;    // S_ii
  std::vector<double> kappa_, ext_;
  std::vector<unsigned char> midpoint_;  // both directions use the midpoint rule
  std::vector<double> lateral_coef_, up_coef_, down_coef_;  // own-cell stencil weights per row
  mutable std::once_flag factor_once_;
  mutable std::unique_ptr<Eigen::MatrixXd> factor_;
  mutable double last_residual_ = 0.0;
};

/// Assembles the operator on the grid. Throws kQuadratureFailure when an
/// exterior tail integral does not converge.
std::shared_ptr<const AssembledOperator> assemble_operator(const Grid& grid, const ModelParams& params,
                                                           const ConstantResult& c, int pv_radius_cells = 2,
                                                           const AssemblyOptions& opt = {});

GridFunction solve_potential(const AssembledOperator& a, const GridFunction& f);
GridFunction green_column(const AssembledOperator& a, int y_cell);
/// A u = x_d^gamma; for -1 < gamma < 0 the right side is the cell average.
GridFunction killed_potential(const AssembledOperator& a, double gamma);

/// Exterior boundary data. Exactly one description is used: a constant, or a
/// field g integrated over support boxes (lateral coordinates then height;
/// the boxes must avoid D), or a field over the whole exterior.
struct ExteriorData {
  std::optional<double> constant;
  HalfSpaceField g;
  std::vector<Box> support;
  /// Known power y_d^e of g at y_d = 0, used to grade the support quadrature.
  std::optional<double> boundary_exponent;

  static ExteriorData uniform(double c);
  static ExteriorData indicator(std::vector<Box> target);
};

/// s(x_i) = int_{H \ D} J(x_i, y) g(y) dy
std::vector<double> exterior_source(const AssembledOperator& a, const ExteriorData& data, double rel_tol = 1e-7,
                                    int threads = 0);
GridFunction harmonic_extension(const AssembledOperator& a, const ExteriorData& data);
/// Probability of leaving D by a jump into the union of the target boxes.
GridFunction exit_probability(const AssembledOperator& a, const std::vector<Box>& target);

GridFunction grid_function(const AssembledOperator& a, std::vector<double> values);

}  // namespace gfd
