#pragma once

#include "ldpe/types.hpp"

#include <cstdint>
#include <vector>

namespace ldpe {

/// An n×p design whose columns all have squared norm n, together with the
/// original column scales ‖col_j‖₂/√n so raw-scale coefficients can be
/// recovered.
class StandardizedDesign {
 public:
  /// Validates ‖x_j‖₂² = n within 1e-8·n for every column.
  StandardizedDesign(Matrix x, Vector original_scales);

  const Matrix& X() const { return x_; }
  const Vector& original_scales() const { return scales_; }
  Index n() const { return x_.rows(); }
  Index p() const { return x_.cols(); }
  auto col(Index j) const { return x_.col(j); }

 private:
  Matrix x_;
  Vector scales_;
};

/// Rescales every column of M to squared norm n. Throws ZeroColumnError on a
/// zero column.
StandardizedDesign standardize_columns(const Matrix& m);

/// Subtracts the column mean from every column (optional pre-centering).
void center_columns(Matrix& m);
void center(Vector& v);

/// Residual of v after projecting onto span{design columns in basis_cols},
/// computed through a rank-revealing orthogonal factorization.
Vector project_residual(const Vector& v, const std::vector<Index>& basis_cols,
                        const StandardizedDesign& design);

/// Reusable projector onto the orthogonal complement of a fixed column span.
class ComplementProjector {
 public:
  ComplementProjector() = default;
  /// basis: n×k matrix whose column span is projected out.
  explicit ComplementProjector(const Matrix& basis);

  Vector residual(const Vector& v) const;
  /// Applies the projector column-by-column.
  Matrix residual_matrix(const Matrix& m) const;
  Index rank() const { return rank_; }
  /// Orthonormal basis of the projected-out span (n×rank).
  const Matrix& q() const { return q_; }

 private:
  Matrix q_;  // n×rank orthonormal basis
  Index rank_ = 0;
};

/// Φ(x), the standard normal CDF.
double normal_cdf(double x);

/// Φ⁻¹(q) for q in (0,1), accurate to 1e-9 absolute: rational approximation
/// refined by one Newton step against the erfc-based CDF.
double normal_quantile(double q);

/// FNV-1a over the raw bytes of the standardized matrix; keys score caches.
std::uint64_t design_hash(const StandardizedDesign& design);

}  // namespace ldpe
