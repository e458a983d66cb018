#pragma once

#include "ldpe/numerics.hpp"
#include "ldpe/types.hpp"

#include <vector>

namespace ldpe {

struct LassoSolution {
  Vector coefficients;
  Vector residual;
  double lambda = 0.0;
  long iterations = 0;  // coordinate-descent sweeps
  bool converged = true;
};

struct KktReport {
  double stationarity_violation = 0.0;  // max over nonzero coefficients
  double bound_violation = 0.0;         // max over all columns
};

/// Minimizes ‖response − predictors·b‖₂²/(2n) + λ‖b‖₁ by cyclic coordinate
/// descent over an active set, ascending coordinate order, optional warm start.
/// Non-convergence is reported through the flag, not an exception.
LassoSolution solve_lasso(const Matrix& predictors, const Vector& response, double lambda,
                          const Vector* warm_start = nullptr);

/// Recomputes both KKT quantities of a solution from scratch.
KktReport verify_kkt(const LassoSolution& sol, const Matrix& predictors, const Vector& response);

/// Gram-based coordinate descent engine. Maintains the unnormalized gradient
/// g = c0 − G·γ across warm-started solves, which makes per-λ path statistics
/// (max correlations, KKT checks) O(q) instead of O(nq).
class GramLassoSolver {
 public:
  /// gram: q×q matrix AᵀA; c0: Aᵀy; n: sample count in the 1/(2n) scaling.
  GramLassoSolver(const Matrix& gram, Vector c0, Index n);

  /// Solves at the given penalty from the current state. pinned (if ≥ 0) is a
  /// coordinate frozen at zero. coef_tol is the per-sweep update stop rule and
  /// kkt_target the self-check threshold before accepting; returns false if
  /// the sweep cap was hit first.
  bool solve(double lambda, Index pinned = -1, long max_sweeps = 100000,
             double coef_tol = 1e-10, double kkt_target = 2e-9);

  const Vector& gamma() const { return gamma_; }
  const Vector& gradient() const { return g_; }
  long sweeps() const { return sweeps_; }

  void reset();
  /// Installs a starting point and re-derives the gradient.
  void set_gamma(const Vector& gamma);
  /// Recomputes g from scratch, clearing accumulated drift.
  void refresh_gradient();
  double kkt_stationarity(double lambda, Index pinned) const;
  double kkt_bound(double lambda, Index pinned) const;

 private:
  double sweep(double lambda, Index pinned, bool active_only);
  void activate(Index k);
  bool exact_refinement(double lambda);

  const Matrix* gram_;
  Vector c0_;
  Vector diag_;
  double n_;
  Vector gamma_;
  Vector g_;
  std::vector<Index> active_;  // ascending
  std::vector<char> in_active_;
  long sweeps_ = 0;
};

/// Geometric grid of `points` values from lambda_max down to ratio·lambda_max.
Vector geometric_grid(double lambda_max, int points = 100, double ratio = 1e-3);

struct PathPoint {
  double lambda = 0.0;
  Vector gamma;  // length p−1, coefficients of x_j on X_{−j}
  Vector z;      // length n, the residual x_j − X_{−j}·γ̂
  double z_norm = 0.0;
  double eta = 0.0;  // max_{k≠j} |x_kᵀz| / ‖z‖₂
  double tau = 0.0;  // ‖z‖₂ / |x_jᵀz|
  bool degenerate = false;
  bool converged = true;
};

struct LassoPath {
  Index target_col = 0;
  Vector grid;  // strictly decreasing
  std::vector<PathPoint> points;
};

/// Lasso path of x_j regressed on the remaining columns, largest λ first with
/// warm starts. Points with |x_jᵀz| < 1e-10·n are flagged degenerate.
LassoPath lasso_path_for_column(const StandardizedDesign& design, Index j, const Vector& grid);

/// Grid for column j: geometric from λ_max,j = max_{k≠j}|x_kᵀx_j|/n over three
/// decades; a unit top is substituted when the columns are exactly orthogonal.
Vector default_grid_for_column(const StandardizedDesign& design, Index j, int points = 100,
                               double ratio = 1e-3);

}  // namespace ldpe
