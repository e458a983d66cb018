#pragma once

#include "ldpe/numerics.hpp"
#include "ldpe/rng.hpp"
#include "ldpe/types.hpp"

#include <Eigen/SparseCore>

#include <vector>

namespace ldpe {

struct KappaBracket {
  double lower = 0.0;  // certified lower bound on κ²(ξ,S)
  double upper = 0.0;  // best feasible value found
  bool exact_mode = true;
};

/// Bracket for the squared compatibility factor
/// κ²(ξ,S) = inf{ ‖Xu‖₂²·|S| / (n·‖u_S‖₁²) : ‖u_{S^c}‖₁ ≤ ξ‖u_S‖₁ }.
/// Exact mode (|S| ≤ 12) enumerates sign patterns of u_S and solves each
/// convex piece by projected gradient; otherwise 1e5 random cone directions
/// give an upper bound only (lower = 0).
KappaBracket compatibility_factor(const StandardizedDesign& design, const std::vector<Index>& s_set,
                                  double xi, bool force_sampling = false,
                                  RngStream stream = {0x6B617070u, 0});

struct SparseEigen {
  double phi_minus = 0.0;
  double phi_plus = 0.0;
  bool exact_mode = true;
};

/// φ₋ = min over B ⊇ S, |B\S| ≤ m of λ_min(X_BᵀX_B/n);
/// φ₊ = max over B ∩ S = ∅, |B| ≤ m of λ_max(X_BᵀX_B/n).
/// Enumeration requires |S|+m ≤ 16 and at most 1e6 candidate subsets; larger
/// problems must request sampling (1e4 random subsets, one-sided bounds).
SparseEigen sparse_eigenvalues(const StandardizedDesign& design, const std::vector<Index>& s_set,
                               Index m, bool allow_sampling = false,
                               RngStream stream = {0x65696732u, 0});

struct ThresholdedGram {
  Eigen::SparseMatrix<double> matrix;  // (x_jᵀx_k/n)·1{|x_jᵀx_k/n| ≥ λ₁}
  double eig_min = 0.0;
  double eig_max = 0.0;
  double lambda1 = 0.0;
};

ThresholdedGram thresholded_gram(const StandardizedDesign& design, double lambda1);

/// Sufficient-condition check for a κ² lower bound from the thresholded Gram,
/// with c_* and c^* taken from its extreme eigenvalues and (s, ξ) supplied by
/// the caller.
struct GramConditionReport {
  double c_star = 0.0;  // min eigenvalue
  double c_sup = 0.0;   // max eigenvalue
  double cap_k = 0.0;   // K = 2ξ²(c^*/c_* + 1/2)
  bool kappa_condition = false;  // s·λ₁·(1+ξ)² ≤ c_*/2
  bool eigen_condition = false;  // s·λ₁·(1+K) + λ₁ ≤ c_*/2
  double implied_kappa_sq = 0.0;  // c_*/2 when kappa_condition holds
};

GramConditionReport gram_conditions(const ThresholdedGram& gram, double s, double xi);

struct OracleEstimate {
  double beta_o = 0.0;
  double sigma_o = 0.0;
  double z_norm = 0.0;
};

/// Simulation benchmark: least squares for β_j given every β_k outside the
/// three-column window K_j = {j−1,j,j+1} (clipped at the boundary).
OracleEstimate oracle_estimate(const StandardizedDesign& design, const Vector& y,
                               const Vector& true_beta, const Vector& true_eps, Index j);

/// Σ_j min(|β_j|/(σ·λ_univ(n,p)), 1).
double capped_l1_sparsity(const Vector& beta, double sigma, Index n, Index p);

/// Full report bundled for serialization.
struct RegularityReport {
  std::vector<Index> s_set;
  double xi = 0.0;
  KappaBracket kappa;
  SparseEigen eigen;
  Index m = 0;
  double lambda1 = 0.0;
  double gram_eig_min = 0.0;
  double gram_eig_max = 0.0;
  GramConditionReport conditions;
};

}  // namespace ldpe
