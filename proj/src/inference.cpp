#include "ldpe/inference.hpp"

#include "ldpe/numerics.hpp"

#include <cmath>
#include <limits>

namespace ldpe {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

LdpeFit ldpe_estimate(const StandardizedDesign& design, const Vector& y,
                      std::shared_ptr<const ScoreSet> scores, const InitialFit& init) {
  if (!scores) throw DomainError("scores required");
  if (scores->design_hash != design_hash(design)) throw ScoreMismatchError();
  if (init.beta_init.size() != design.p() || scores->size() != design.p())
    throw DomainError("initial fit / score dimensions do not match the design");

  LdpeFit fit;
  fit.beta_init = init.beta_init;
  fit.beta_hat = init.beta_init;
  fit.sigma_hat = init.sigma_hat;
  fit.init_method = init.method;
  fit.lambda0 = init.lambda0;
  fit.scores = std::move(scores);
  fit.design_hash = fit.scores->design_hash;
  fit.n = design.n();
  fit.tau = Vector::Constant(design.p(), kNaN);
  fit.eta = Vector::Constant(design.p(), kNaN);
  fit.has_score.assign(static_cast<std::size_t>(design.p()), 0);
  fit.original_scales = design.original_scales();

  const Vector residual = y - design.X() * init.beta_init;
  for (Index j = 0; j < design.p(); ++j) {
    const ScoreVector& s = fit.scores->at(j);
    if (!s.valid) continue;
    fit.beta_hat[j] = init.beta_init[j] + s.z.dot(residual) / s.zx;
    fit.tau[j] = s.tau;
    fit.eta[j] = s.eta;
    fit.has_score[static_cast<std::size_t>(j)] = 1;
  }
  return fit;
}

double covariance_entry(const LdpeFit& fit, Index j, Index k) {
  const ScoreVector& sj = fit.scores->at(j);
  const ScoreVector& sk = fit.scores->at(k);
  if (!sj.valid || !sk.valid) throw DomainError("covariance requested for a scoreless coordinate");
  return sj.z.dot(sk.z) / (std::abs(sj.zx) * std::abs(sk.zx));
}

Matrix covariance_matrix(const LdpeFit& fit, bool force) {
  const Index p = fit.p();
  if (p > 2000 && !force)
    throw SizeError("full covariance for p > 2000 must be forced explicitly");
  Matrix v = Matrix::Constant(p, p, kNaN);
  for (Index j = 0; j < p; ++j) {
    if (!fit.has_score[static_cast<std::size_t>(j)]) continue;
    for (Index k = j; k < p; ++k) {
      if (!fit.has_score[static_cast<std::size_t>(k)]) continue;
      const double value = covariance_entry(fit, j, k);
      v(j, k) = value;
      v(k, j) = value;
    }
  }
  return v;
}

IntervalEstimate confidence_interval(const LdpeFit& fit, const Contrast& a, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  if (a.empty()) throw DomainError("contrast must be nonzero");
  IntervalEstimate est;
  est.target = a;
  est.level = 1.0 - alpha;
  double quad = 0.0;
  for (const auto& [j, w] : a) {
    if (j < 0 || j >= fit.p()) throw DomainError("contrast index out of range");
    if (!fit.has_score[static_cast<std::size_t>(j)])
      throw DomainError("contrast touches a coordinate without a score");
    est.point += w * fit.beta_hat[j];
    for (const auto& [k, wk] : a) quad += w * wk * covariance_entry(fit, j, k);
  }
  if (quad < -1e-10) throw NegativeVarianceError("aᵀVa is negative beyond tolerance");
  quad = std::max(quad, 0.0);
  est.half_width = fit.sigma_hat * normal_quantile(1.0 - alpha / 2.0) * std::sqrt(quad);
  return est;
}

std::vector<IntervalEstimate> simultaneous_intervals(const LdpeFit& fit, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  const double q = normal_quantile(1.0 - alpha / (2.0 * static_cast<double>(fit.p())));
  std::vector<IntervalEstimate> out;
  out.reserve(static_cast<std::size_t>(fit.p()));
  for (Index j = 0; j < fit.p(); ++j) {
    if (!fit.has_score[static_cast<std::size_t>(j)]) continue;
    IntervalEstimate est;
    est.target = {{j, 1.0}};
    est.point = fit.beta_hat[j];
    est.half_width = fit.sigma_hat * fit.tau[j] * q;
    est.level = 1.0 - alpha;
    out.push_back(std::move(est));
  }
  return out;
}

SelectionResult threshold_ldpe(const LdpeFit& fit, double alpha, ThresholdMode mode, double c_n) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  if (c_n < 0.0) throw DomainError("c_n must be nonnegative");
  const double q_arg = 1.0 - alpha / (2.0 * static_cast<double>(fit.p()));
  if (!(q_arg > 0.0 && q_arg < 1.0)) throw DomainError("alpha too large for this p");
  const double l0 = normal_quantile(q_arg);
  SelectionResult result;
  result.mode = mode;
  result.thresholds = Vector::Constant(fit.p(), kNaN);
  result.estimates = Vector::Zero(fit.p());
  for (Index j = 0; j < fit.p(); ++j) {
    if (!fit.has_score[static_cast<std::size_t>(j)]) {
      result.excluded.push_back(j);
      continue;
    }
    const double t = (1.0 + c_n) * fit.sigma_hat * fit.tau[j] * l0;
    result.thresholds[j] = t;
    const double b = fit.beta_hat[j];
    if (std::abs(b) > t) result.selected.push_back(j);
    result.estimates[j] =
        mode == ThresholdMode::hard ? (std::abs(b) > t ? b : 0.0) : soft_threshold_value(b, t);
  }
  return result;
}

}  // namespace ldpe
