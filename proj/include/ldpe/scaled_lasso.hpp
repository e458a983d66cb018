#pragma once

#include "ldpe/numerics.hpp"
#include "ldpe/types.hpp"

#include <vector>

namespace ldpe {

enum class InitMethod { scaled_lasso, scaled_lasso_lse };

struct InitialFit {
  Vector beta_init;
  double sigma_hat = 0.0;
  std::vector<Index> support;
  double lambda0 = 0.0;
  InitMethod method = InitMethod::scaled_lasso;
  bool refit_fallback = false;  // |Ŝ| ≥ n, least-squares refit skipped
  bool converged = true;
};

/// The universal penalty level √((2/n)·ln p).
double lambda_univ(Index n, Index p);

/// Joint estimation of (β, σ): alternate the Lasso at penalty σλ₀ with
/// σ = ‖y−Xb‖₂/√n until the pair is stationary. Throws DegenerateResponseError
/// when the residual collapses (the joint objective is then ill-posed).
/// A precomputed Gram matrix XᵀX may be supplied to skip its formation.
InitialFit fit_scaled_lasso(const StandardizedDesign& design, const Vector& y, double lambda0,
                            const Matrix* gram = nullptr);

/// Scaled Lasso followed by ordinary least squares on the selected support,
/// with σ̂ = ‖y−Xb̂‖₂/√(n−|Ŝ|). Falls back to the scaled-Lasso fit (flagged)
/// when |Ŝ| ≥ n. When the scaled-Lasso residual collapses on the way, the
/// support at that point already interpolates y and the refit is returned
/// with the degrees-of-freedom adjusted σ̂ instead of an error.
InitialFit fit_scaled_lasso_lse(const StandardizedDesign& design, const Vector& y, double lambda0,
                                const Matrix* gram = nullptr);

/// Evaluates ‖y−Xb‖₂²/(2σn) + σ/2 + λ₀‖b‖₁.
double scaled_lasso_objective(const StandardizedDesign& design, const Vector& y, const Vector& b,
                              double sigma, double lambda0);

}  // namespace ldpe
