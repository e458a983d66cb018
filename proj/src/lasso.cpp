#include "ldpe/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ldpe {

namespace {

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

constexpr long kActiveSweepBlock = 10;  // active-set sweeps between full sweeps

}  // namespace

GramLassoSolver::GramLassoSolver(const Matrix& gram, Vector c0, Index n)
    : gram_(&gram),
      c0_(std::move(c0)),
      diag_(gram.diagonal()),
      n_(static_cast<double>(n)),
      gamma_(Vector::Zero(gram.cols())),
      g_(c0_),
      in_active_(static_cast<std::size_t>(gram.cols()), 0) {}

void GramLassoSolver::reset() {
  gamma_.setZero();
  g_ = c0_;
  active_.clear();
  std::fill(in_active_.begin(), in_active_.end(), 0);
  sweeps_ = 0;
}

void GramLassoSolver::activate(Index k) {
  if (in_active_[static_cast<std::size_t>(k)]) return;
  in_active_[static_cast<std::size_t>(k)] = 1;
  active_.insert(std::lower_bound(active_.begin(), active_.end(), k), k);
}

double GramLassoSolver::sweep(double lambda, Index pinned, bool active_only) {
  double max_delta = 0.0;
  const double nl = n_ * lambda;
  auto update = [&](Index k) {
    if (k == pinned || diag_[k] <= 0.0) return;
    const double cand = gamma_[k] * diag_[k] + g_[k];
    const double next = soft_threshold(cand, nl) / diag_[k];
    const double delta = next - gamma_[k];
    if (delta != 0.0) {
      g_.noalias() -= delta * gram_->col(k);
      gamma_[k] = next;
      if (next != 0.0) activate(k);
      max_delta = std::max(max_delta, std::abs(delta));
    }
  };
  if (active_only) {
    for (Index k : active_) update(k);
  } else {
    for (Index k = 0; k < gamma_.size(); ++k) update(k);
  }
  ++sweeps_;
  return max_delta;
}

void GramLassoSolver::set_gamma(const Vector& gamma) {
  if (gamma.size() != gamma_.size()) throw DomainError("warm start length mismatch");
  gamma_ = gamma;
  active_.clear();
  std::fill(in_active_.begin(), in_active_.end(), 0);
  for (Index k = 0; k < gamma_.size(); ++k)
    if (gamma_[k] != 0.0) activate(k);
  refresh_gradient();
}

void GramLassoSolver::refresh_gradient() {
  g_ = c0_;
  for (Index k : active_)
    if (gamma_[k] != 0.0) g_.noalias() -= gamma_[k] * gram_->col(k);
}

// Solves the stationarity system on the current support in one shot:
// G_AA γ_A = c0_A − nλ·sign(γ_A). Thousands of sweeps collapse into one small
// factorization once the sign pattern has stabilized; the candidate is
// accepted only when it keeps every sign, so a wrong pattern just falls back
// to coordinate descent.
bool GramLassoSolver::exact_refinement(double lambda) {
  std::vector<Index> support;
  for (Index k : active_)
    if (gamma_[k] != 0.0) support.push_back(k);
  const Index s = static_cast<Index>(support.size());
  if (s == 0 || s > 400) return false;
  Matrix block(s, s);
  Vector rhs(s);
  for (Index i = 0; i < s; ++i) {
    const Index ki = support[static_cast<std::size_t>(i)];
    for (Index j = 0; j < s; ++j) block(i, j) = (*gram_)(ki, support[static_cast<std::size_t>(j)]);
    rhs[i] = c0_[ki] - n_ * lambda * (gamma_[ki] > 0.0 ? 1.0 : -1.0);
  }
  const Vector solution = block.completeOrthogonalDecomposition().solve(rhs);
  for (Index i = 0; i < s; ++i) {
    const Index ki = support[static_cast<std::size_t>(i)];
    if (solution[i] * gamma_[ki] < 0.0) return false;  // sign flip: reject
  }
  for (Index i = 0; i < s; ++i) gamma_[support[static_cast<std::size_t>(i)]] = solution[i];
  refresh_gradient();
  return true;
}

double GramLassoSolver::kkt_stationarity(double lambda, Index pinned) const {
  double worst = 0.0;
  for (Index k : active_) {
    if (k == pinned || gamma_[k] == 0.0) continue;
    const double sign = gamma_[k] > 0.0 ? 1.0 : -1.0;
    worst = std::max(worst, std::abs(g_[k] / n_ - lambda * sign));
  }
  return worst;
}

double GramLassoSolver::kkt_bound(double lambda, Index pinned) const {
  double worst = 0.0;
  for (Index k = 0; k < g_.size(); ++k) {
    if (k == pinned || diag_[k] <= 0.0) continue;
    worst = std::max(worst, std::abs(g_[k]) / n_ - lambda);
  }
  return worst;
}

bool GramLassoSolver::solve(double lambda, Index pinned, long max_sweeps, double coef_tol,
                            double kkt_target) {
  if (!(lambda > 0.0)) throw DomainError("lasso penalty must be positive");
  const long start = sweeps_;
  double tol = coef_tol;
  int tightenings = 0;
  auto kkt_ok = [&] {
    return std::max(kkt_stationarity(lambda, pinned), kkt_bound(lambda, pinned)) <= kkt_target;
  };
  // Acceptance is driven by the KKT system itself: when the active block is
  // rank-deficient (p > n at small λ) the coefficients wander in the null
  // space long after the residual — and with it every KKT quantity — has
  // converged, so a pure max-update rule would spin.
  int refinements = 0;
  while (sweeps_ - start < max_sweeps) {
    double delta = sweep(lambda, pinned, /*active_only=*/false);
    if (kkt_ok()) {
      refresh_gradient();
      if (kkt_ok()) return true;
    }
    if (delta <= tol) {
      refresh_gradient();
      if (kkt_ok()) return true;
      if (++tightenings > 2) return false;
      tol *= 0.1;
      continue;
    }
    if (refinements < 6 && delta < 1e-3) {
      ++refinements;
      if (exact_refinement(lambda)) continue;  // full sweep picks up violators
    }
    long block = 0;
    while (block++ < kActiveSweepBlock && sweeps_ - start < max_sweeps) {
      delta = sweep(lambda, pinned, /*active_only=*/true);
      if (delta <= tol) break;
    }
  }
  return false;
}

LassoSolution solve_lasso(const Matrix& predictors, const Vector& response, double lambda,
                          const Vector* warm_start) {
  if (predictors.rows() != response.size()) throw DomainError("dimension mismatch");
  if (!(lambda > 0.0)) throw DomainError("lasso penalty must be positive");
  Matrix gram = predictors.transpose() * predictors;
  GramLassoSolver solver(gram, predictors.transpose() * response, predictors.rows());
  if (warm_start != nullptr) solver.set_gamma(*warm_start);
  LassoSolution sol;
  sol.converged = solver.solve(lambda);
  sol.coefficients = solver.gamma();
  sol.lambda = lambda;
  sol.iterations = solver.sweeps();
  sol.residual = response - predictors * sol.coefficients;
  return sol;
}

KktReport verify_kkt(const LassoSolution& sol, const Matrix& predictors, const Vector& response) {
  const double n = static_cast<double>(predictors.rows());
  const Vector resid = response - predictors * sol.coefficients;
  KktReport report;
  for (Index k = 0; k < predictors.cols(); ++k) {
    const double corr = predictors.col(k).dot(resid) / n;
    report.bound_violation = std::max(report.bound_violation, std::abs(corr) - sol.lambda);
    if (sol.coefficients[k] != 0.0) {
      const double sign = sol.coefficients[k] > 0.0 ? 1.0 : -1.0;
      report.stationarity_violation =
          std::max(report.stationarity_violation, std::abs(corr - sol.lambda * sign));
    }
  }
  report.bound_violation = std::max(report.bound_violation, 0.0);
  return report;
}

Vector geometric_grid(double lambda_max, int points, double ratio) {
  if (!(lambda_max > 0.0) || points < 1 || !(ratio > 0.0 && ratio < 1.0))
    throw DomainError("invalid lambda grid parameters");
  Vector grid(points);
  grid[0] = lambda_max;
  for (int i = 1; i < points; ++i)
    grid[i] = lambda_max * std::pow(ratio, static_cast<double>(i) / (points - 1));
  return grid;
}

Vector default_grid_for_column(const StandardizedDesign& design, Index j, int points,
                               double ratio) {
  const double n = static_cast<double>(design.n());
  Vector corr = design.X().transpose() * design.col(j);
  corr[j] = 0.0;
  // The 1e-10 tie guard keeps the top grid point exactly at the null model;
  // without it the rounding of |x_kᵀx_j|/n can activate a 1-ulp coefficient.
  const double lambda_max = corr.cwiseAbs().maxCoeff() / n * (1.0 + 1e-10);
  return geometric_grid(lambda_max > 1e-12 ? lambda_max : 1.0, points, ratio);
}

LassoPath lasso_path_for_column(const StandardizedDesign& design, Index j, const Vector& grid) {
  if (j < 0 || j >= design.p()) throw DomainError("column index out of range");
  for (Index i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i] > grid[i + 1])) throw DomainError("lambda grid must be strictly decreasing");
  if (grid.size() == 0 || !(grid[grid.size() - 1] > 0.0))
    throw DomainError("lambda grid must be positive");

  const Matrix& x = design.X();
  const Index n = design.n();
  const Index p = design.p();
  Matrix gram = x.transpose() * x;
  GramLassoSolver solver(gram, gram.col(j), n);

  LassoPath path;
  path.target_col = j;
  path.grid = grid;
  path.points.reserve(static_cast<std::size_t>(grid.size()));
  for (Index i = 0; i < grid.size(); ++i) {
    PathPoint pt;
    pt.lambda = grid[i];
    pt.converged = solver.solve(grid[i], j, 100000, 1e-8, 2e-7);
    solver.refresh_gradient();

    const Vector& gamma_full = solver.gamma();
    Vector z = x.col(j);
    for (Index k = 0; k < p; ++k)
      if (gamma_full[k] != 0.0) z.noalias() -= gamma_full[k] * x.col(k);
    pt.z = std::move(z);
    pt.z_norm = pt.z.norm();

    const Vector& g = solver.gradient();
    double max_corr = 0.0;
    for (Index k = 0; k < p; ++k)
      if (k != j) max_corr = std::max(max_corr, std::abs(g[k]));
    const double xjz = g[j];
    pt.eta = pt.z_norm > 0.0 ? max_corr / pt.z_norm : 0.0;
    pt.degenerate = std::abs(xjz) < 1e-10 * static_cast<double>(n);
    pt.tau = pt.degenerate ? std::numeric_limits<double>::infinity() : pt.z_norm / std::abs(xjz);

    pt.gamma.resize(p - 1);
    Index out = 0;
    for (Index k = 0; k < p; ++k)
      if (k != j) pt.gamma[out++] = gamma_full[k];
    path.points.push_back(std::move(pt));
  }
  return path;
}

}  // namespace ldpe
