#pragma once

#include "ldpe/scaled_lasso.hpp"
#include "ldpe/score.hpp"
#include "ldpe/types.hpp"

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

namespace ldpe {

/// Debiased fit: β̂_j = β̂_j^(init) + z_jᵀ(y − Xβ̂^(init))/(z_jᵀx_j), with the
/// bias/noise factors copied from the scores. Coordinates without a usable
/// score keep the initial estimate and carry NaN factors.
struct LdpeFit {
  Vector beta_init;
  Vector beta_hat;
  double sigma_hat = 0.0;
  Vector tau;  // NaN where no score
  Vector eta;
  std::vector<char> has_score;
  std::shared_ptr<const ScoreSet> scores;  // kept for covariance queries
  std::uint64_t design_hash = 0;
  InitMethod init_method = InitMethod::scaled_lasso_lse;
  double lambda0 = 0.0;
  Index n = 0;
  Vector original_scales;  // maps standardized-scale coefficients back to raw columns

  Index p() const { return beta_hat.size(); }
};

LdpeFit ldpe_estimate(const StandardizedDesign& design, const Vector& y,
                      std::shared_ptr<const ScoreSet> scores, const InitialFit& init);

/// V_jk = z_jᵀz_k / (|z_jᵀx_j|·|z_kᵀx_k|); V_jj = τ_j².
double covariance_entry(const LdpeFit& fit, Index j, Index k);

/// Full p×p noise covariance. Guarded to p ≤ 2000 unless force is set (the
/// matrix is quadratic in p; contrasts only ever need a submatrix).
Matrix covariance_matrix(const LdpeFit& fit, bool force = false);

/// Sparse contrast aᵀβ as (index, weight) pairs.
using Contrast = std::vector<std::pair<Index, double>>;

struct IntervalEstimate {
  Contrast target;
  double point = 0.0;
  double half_width = 0.0;
  double level = 0.0;  // 1 − α
};

IntervalEstimate confidence_interval(const LdpeFit& fit, const Contrast& a, double alpha);

/// Bonferroni-adjusted per-coordinate intervals at level α/(2p); coordinates
/// without scores are omitted.
std::vector<IntervalEstimate> simultaneous_intervals(const LdpeFit& fit, double alpha);

enum class ThresholdMode { hard, soft };

struct SelectionResult {
  Vector thresholds;  // t̂_j = (1+c_n)·σ̂·τ_j·Φ⁻¹(1−α/(2p)); NaN where no score
  std::vector<Index> selected;
  ThresholdMode mode = ThresholdMode::hard;
  Vector estimates;
  std::vector<Index> excluded;  // coordinates without scores
};

SelectionResult threshold_ldpe(const LdpeFit& fit, double alpha, ThresholdMode mode,
                               double c_n = 0.0);

inline double soft_threshold_value(double x, double t) {
  const double shrunk = std::abs(x) - t;
  return shrunk > 0.0 ? (x > 0.0 ? shrunk : -shrunk) : 0.0;
}

}  // namespace ldpe
