#include "ldpe/numerics.hpp"

#include <Eigen/QR>

#include <cmath>
#include <cstring>

namespace ldpe {

StandardizedDesign::StandardizedDesign(Matrix x, Vector original_scales)
    : x_(std::move(x)), scales_(std::move(original_scales)) {
  if (x_.rows() < 1 || x_.cols() < 1) throw DomainError("design must be nonempty");
  if (scales_.size() != x_.cols()) throw DomainError("scale vector length mismatch");
  const double n = static_cast<double>(x_.rows());
  for (Index j = 0; j < x_.cols(); ++j) {
    if (!(scales_[j] > 0.0)) throw ZeroColumnError(j);
    const double sq = x_.col(j).squaredNorm();
    if (std::abs(sq - n) > 1e-8 * n)
      throw DomainError("column " + std::to_string(j) + " is not standardized");
  }
}

StandardizedDesign standardize_columns(const Matrix& m) {
  const double sqrt_n = std::sqrt(static_cast<double>(m.rows()));
  Matrix x = m;
  Vector scales(m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    const double norm = x.col(j).norm();
    if (norm == 0.0) throw ZeroColumnError(j);
    x.col(j) *= sqrt_n / norm;
    scales[j] = norm / sqrt_n;
  }
  return StandardizedDesign(std::move(x), std::move(scales));
}

void center_columns(Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j) m.col(j).array() -= m.col(j).mean();
}

void center(Vector& v) { v.array() -= v.mean(); }

ComplementProjector::ComplementProjector(const Matrix& basis) {
  if (basis.cols() == 0) return;
  Eigen::ColPivHouseholderQR<Matrix> qr(basis);
  rank_ = qr.rank();
  if (rank_ == 0) return;
  q_ = qr.householderQ() * Matrix::Identity(basis.rows(), rank_);
}

Vector ComplementProjector::residual(const Vector& v) const {
  if (rank_ == 0) return v;
  return v - q_ * (q_.transpose() * v);
}

Matrix ComplementProjector::residual_matrix(const Matrix& m) const {
  if (rank_ == 0) return m;
  return m - q_ * (q_.transpose() * m);
}

Vector project_residual(const Vector& v, const std::vector<Index>& basis_cols,
                        const StandardizedDesign& design) {
  if (basis_cols.empty()) return v;
  Matrix basis(design.n(), static_cast<Index>(basis_cols.size()));
  for (Index i = 0; i < basis.cols(); ++i) basis.col(i) = design.col(basis_cols[i]);
  return ComplementProjector(basis).residual(v);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

namespace {

// Wichura's PPND16 rational approximation (Applied Statistics 37, algorithm
// AS 241); relative error below 1e-15 on its own.
double quantile_as241(double q) {
  const double r = q - 0.5;
  if (std::abs(r) <= 0.425) {
    const double s = 0.180625 - r * r;
    return r *
           (((((((2.5090809287301226727e3 * s + 3.3430575583588128105e4) * s +
                 6.7265770927008700853e4) *
                    s +
                4.5921953931549871457e4) *
                   s +
               1.3731693765509461125e4) *
                  s +
              1.9715909503065514427e3) *
                 s +
             1.3314166789178437745e2) *
                s +
            3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * s + 2.8729085735721942674e4) * s +
                 3.9307895800092710610e4) *
                    s +
                2.1213794301586595867e4) *
                   s +
               5.3941960214247511077e3) *
                  s +
              6.8718700749205790830e2) *
                 s +
             4.2313330701600911252e1) *
                s +
            1.0);
  }
  double t = (r < 0.0) ? q : 1.0 - q;
  t = std::sqrt(-std::log(t));
  double value;
  if (t <= 5.0) {
    t -= 1.6;
    value = (((((((7.74545014278341407640e-4 * t + 2.27238449892691845833e-2) * t +
                  2.41780725177450611770e-1) *
                     t +
                 1.27045825245236838258e0) *
                    t +
                3.64784832476320460504e0) *
                   t +
               5.76949722146069140550e0) *
                  t +
              4.63033784615654529590e0) *
                 t +
             1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * t + 5.47593808499534494600e-4) * t +
                  1.51986665636164571966e-2) *
                     t +
                 1.48103976427480074590e-1) *
                    t +
                6.89767334985100004550e-1) *
                   t +
               1.67638483018380384940e0) *
                  t +
              2.05319162663775882187e0) *
                 t +
             1.0);
  } else {
    t -= 5.0;
    value = (((((((2.01033439929228813265e-7 * t + 2.71155556874348757815e-5) * t +
                  1.24266094738807843860e-3) *
                     t +
                 2.65321895265761230930e-2) *
                    t +
                2.96560571828504891230e-1) *
                   t +
               1.78482653991729133580e0) *
                  t +
              5.46378491116411436990e0) *
                 t +
             6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * t + 1.42151175831644588870e-7) * t +
                  1.84631831751005468180e-5) *
                     t +
                 7.86869131145613259100e-4) *
                    t +
                1.48753612908506148525e-2) *
                   t +
               1.36929880922735805310e-1) *
                  t +
              5.99832206555887937690e-1) *
                 t +
             1.0);
  }
  return (r < 0.0) ? -value : value;
}

}  // namespace

double normal_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile argument must lie in (0,1)");
  double x = quantile_as241(q);
  // One Newton refinement against the erfc-based CDF pins all implementations
  // to the same 1e-9 contract.
  const double pdf = std::exp(-0.5 * x * x) * 0.3989422804014326779;
  if (pdf > 0.0) x -= (normal_cdf(x) - q) / pdf;
  return x;
}

std::uint64_t design_hash(const StandardizedDesign& design) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  const std::uint64_t n = static_cast<std::uint64_t>(design.n());
  const std::uint64_t p = static_cast<std::uint64_t>(design.p());
  mix(&n, sizeof n);
  mix(&p, sizeof p);
  mix(design.X().data(), sizeof(double) * static_cast<std::size_t>(design.X().size()));
  return h;
}

}  // namespace ldpe
