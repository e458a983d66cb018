#include "ldpe/scaled_lasso.hpp"

#include "ldpe/lasso.hpp"

#include <Eigen/QR>

#include <cmath>

namespace ldpe {

double lambda_univ(Index n, Index p) {
  if (n < 1) throw DomainError("n must be at least 1");
  if (p < 2) throw DomainError("p must be at least 2");
  return std::sqrt(2.0 / static_cast<double>(n) * std::log(static_cast<double>(p)));
}

namespace {

struct AlternationResult {
  Vector beta;
  double sigma = 0.0;
  bool degenerate = false;
  bool converged = true;
};

constexpr double kSigmaRelTol = 1e-7;
// Generous cap: near-noiseless data shrinks sigma geometrically and needs
// ~70 iterations to hit the 1e-12 degeneracy guard.
constexpr int kMaxOuter = 200;

AlternationResult alternate(const StandardizedDesign& design, const Vector& y, double lambda0,
                            const Matrix* gram) {
  if (!(lambda0 > 0.0)) throw DomainError("lambda0 must be positive");
  const double yn = y.norm();
  if (!(yn > 0.0)) throw DomainError("response must be nonzero");
  const Index n = design.n();
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  Matrix owned;
  if (gram == nullptr) {
    owned = design.X().transpose() * design.X();
    gram = &owned;
  }
  GramLassoSolver solver(*gram, design.X().transpose() * y, n);

  AlternationResult out;
  out.sigma = yn / sqrt_n;
  out.converged = false;
  for (int iter = 0; iter < kMaxOuter; ++iter) {
    if (!solver.solve(out.sigma * lambda0, -1, 100000, 1e-9, 2e-8)) {
      out.converged = false;
      out.beta = solver.gamma();
      return out;
    }
    const double resid_norm = (y - design.X() * solver.gamma()).norm();
    if (resid_norm < 1e-12 * yn) {
      out.beta = solver.gamma();
      out.sigma = resid_norm / sqrt_n;
      out.degenerate = true;
      return out;
    }
    const double next = resid_norm / sqrt_n;
    const bool done = std::abs(next - out.sigma) <= kSigmaRelTol * next;
    out.sigma = next;
    if (done) {
      out.converged = true;
      break;
    }
  }
  // One last solve so the pair is self-consistent at the reported sigma.
  solver.solve(out.sigma * lambda0, -1, 100000, 1e-9, 2e-8);
  out.beta = solver.gamma();
  out.sigma = (y - design.X() * out.beta).norm() / sqrt_n;
  return out;
}

std::vector<Index> support_of(const Vector& beta) {
  std::vector<Index> s;
  for (Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) s.push_back(j);
  return s;
}

InitialFit lse_refit(const StandardizedDesign& design, const Vector& y,
                     const AlternationResult& state, double lambda0) {
  const Index n = design.n();
  InitialFit fit;
  fit.lambda0 = lambda0;
  fit.method = InitMethod::scaled_lasso_lse;
  fit.converged = state.converged || state.degenerate;
  fit.support = support_of(state.beta);
  const Index s = static_cast<Index>(fit.support.size());
  if (s >= n) {
    fit.beta_init = state.beta;
    fit.sigma_hat = state.sigma;
    fit.refit_fallback = true;
    return fit;
  }
  fit.beta_init = Vector::Zero(design.p());
  if (s == 0) {
    fit.sigma_hat = y.norm() / std::sqrt(static_cast<double>(n));
    return fit;
  }
  Matrix cols(n, s);
  for (Index i = 0; i < s; ++i) cols.col(i) = design.col(fit.support[static_cast<std::size_t>(i)]);
  // Minimum-norm least squares; tolerates a rank-deficient selected block.
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(cols);
  Vector coef = cod.solve(y);
  for (Index i = 0; i < s; ++i) fit.beta_init[fit.support[static_cast<std::size_t>(i)]] = coef[i];
  const double resid_norm = (y - cols * coef).norm();
  fit.sigma_hat = resid_norm / std::sqrt(static_cast<double>(n - s));
  return fit;
}

}  // namespace

InitialFit fit_scaled_lasso(const StandardizedDesign& design, const Vector& y, double lambda0,
                            const Matrix* gram) {
  AlternationResult state = alternate(design, y, lambda0, gram);
  if (state.degenerate) throw DegenerateResponseError();
  InitialFit fit;
  fit.beta_init = state.beta;
  fit.sigma_hat = state.sigma;
  fit.support = support_of(state.beta);
  fit.lambda0 = lambda0;
  fit.method = InitMethod::scaled_lasso;
  fit.converged = state.converged;
  return fit;
}

InitialFit fit_scaled_lasso_lse(const StandardizedDesign& design, const Vector& y, double lambda0,
                                const Matrix* gram) {
  AlternationResult state = alternate(design, y, lambda0, gram);
  return lse_refit(design, y, state, lambda0);
}

double scaled_lasso_objective(const StandardizedDesign& design, const Vector& y, const Vector& b,
                              double sigma, double lambda0) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  const double n = static_cast<double>(design.n());
  const double rss = (y - design.X() * b).squaredNorm();
  return rss / (2.0 * sigma * n) + sigma / 2.0 + lambda0 * b.lpNorm<1>();
}

}  // namespace ldpe
