#pragma once

#include "ldpe/numerics.hpp"
#include "ldpe/types.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace ldpe {

enum class ScoreKind { lasso_relaxed, restricted, exact_projection };

struct ScoreSettings {
  double eta_star_default = -1.0;  // < 0 → √(2·ln p)
  double kappa0 = 0.25;
  double kappa1 = 0.25;
  int grid_points = 100;
  double grid_ratio = 1e-3;
};

/// Relaxed-projection score z_j with its selected penalty and the bias/noise
/// factors η_j = max_{k≠j}|zᵀx_k|/‖z‖₂ and τ_j = ‖z‖₂/|zᵀx_j|.
struct ScoreVector {
  Index j = 0;
  Vector z;
  double lambda_j = 0.0;
  double eta = 0.0;
  double tau = 0.0;
  double zx = 0.0;        // zᵀx_j against the original column
  double eta_star = 0.0;  // the bound actually used after Step 1
  bool eta_star_adjusted = false;
  std::vector<Index> restricted_set;  // K_{j,m}; nonempty only for R-LDPE
  // Factors of the projected problem, kept for diagnostics of R-LDPE scores.
  double eta_projected = std::numeric_limits<double>::quiet_NaN();
  double tau_projected = std::numeric_limits<double>::quiet_NaN();
  bool valid = true;
  std::string error;
};

struct ScoreSet {
  std::vector<ScoreVector> scores;
  std::uint64_t design_hash = 0;
  ScoreKind kind = ScoreKind::lasso_relaxed;
  Index restricted_m = 0;
  ScoreSettings settings;

  const ScoreVector& at(Index j) const { return scores[static_cast<std::size_t>(j)]; }
  Index size() const { return static_cast<Index>(scores.size()); }
};

/// Builds score vectors for one design; the Gram matrix is shared across
/// columns so the per-column work is the path walk alone. Const member calls
/// are safe from concurrent threads.
class ScoreBuilder {
 public:
  ScoreBuilder(const StandardizedDesign& design, ScoreSettings settings = {},
               const Matrix* gram = nullptr);

  /// Penalty selection on the Lasso path of x_j against X_{−j}:
  /// Step 1 certifies (or adjusts) the bias-factor bound η*; Step 2 takes the
  /// smallest grid λ whose noise factor stays within (1+κ₀) of the certified
  /// τ*. Throws AllDegenerateError when no usable path point exists.
  ScoreVector lasso_score(Index j) const;

  /// Same search run after projecting all columns off the span of the m
  /// columns most correlated with x_j; factors are reported against the
  /// original columns.
  ScoreVector restricted_score(Index j, Index m) const;

  /// The unrelaxed score z_j = x_j^⊥ (residual on all other columns); only
  /// sensible when rank(X_{−j}) < n.
  ScoreVector projection_score(Index j) const;

  double eta_star_default() const { return eta_default_; }

 private:
  ScoreVector run_table1(const Matrix& x, const Matrix& gram, Index j) const;
  void attach_original_factors(ScoreVector& score, Index j) const;

  const StandardizedDesign& design_;
  ScoreSettings settings_;
  Matrix owned_gram_;
  const Matrix* gram_;
  double eta_default_;
};

ScoreVector build_score(const StandardizedDesign& design, Index j, ScoreSettings settings = {});
ScoreVector build_restricted_score(const StandardizedDesign& design, Index j, Index m,
                                   ScoreSettings settings = {});

/// Scores for every column. Per-column failures are recorded on the entries
/// (valid = false) instead of aborting the batch; output is bitwise identical
/// for every thread count.
ScoreSet build_all_scores(const StandardizedDesign& design, ScoreSettings settings = {},
                          ScoreKind kind = ScoreKind::lasso_relaxed, Index restricted_m = 4,
                          int threads = 1, const Matrix* gram = nullptr);

/// Binary score cache keyed by the design hash.
void save_scores(const std::string& path, const ScoreSet& scores);
ScoreSet load_scores(const std::string& path);
/// Loads and validates against a design; throws ScoreMismatchError on a
/// different hash.
ScoreSet load_scores_for(const std::string& path, const StandardizedDesign& design);

}  // namespace ldpe
