#include "ldpe/diagnostics.hpp"

#include "ldpe/scaled_lasso.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ldpe {

namespace {

// Euclidean projection onto the probability simplex {a ≥ 0, Σa = 1}.
void project_simplex(Vector& a) {
  std::vector<double> sorted(a.data(), a.data() + a.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumulative = 0.0;
  double theta = 0.0;
  int rho = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) {
      rho = static_cast<int>(i + 1);
      theta = candidate;
    }
  }
  (void)rho;
  for (Index i = 0; i < a.size(); ++i) a[i] = std::max(a[i] - theta, 0.0);
}

// Euclidean projection onto the ℓ1 ball of radius r.
void project_l1_ball(Vector& w, double r) {
  if (w.lpNorm<1>() <= r) return;
  if (r <= 0.0) {
    w.setZero();
    return;
  }
  Vector abs = w.cwiseAbs();
  std::vector<double> sorted(abs.data(), abs.data() + abs.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double candidate = (cumulative - r) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) theta = candidate;
  }
  for (Index i = 0; i < w.size(); ++i) {
    const double mag = std::max(std::abs(w[i]) - theta, 0.0);
    w[i] = w[i] >= 0.0 ? mag : -mag;
  }
}

double top_gram_eigenvalue(const Matrix& x) {
  // Power iteration on XᵀX with a fixed start; enough accuracy for a step size.
  Vector v = Vector::LinSpaced(x.cols(), 1.0, 2.0).normalized();
  double value = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    Vector w = x.transpose() * (x * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    value = norm;
  }
  return value;
}

// Minimizes ‖X_S(σ⊙a) + X_C w‖² over the simplex × ℓ1-ball cone slice by
// accelerated projected gradient.
double solve_cone_piece(const Matrix& xs, const Matrix& xc, const Vector& signs, double xi,
                        double lipschitz) {
  const Index ns = xs.cols();
  const Index nc = xc.cols();
  Vector a = Vector::Constant(ns, 1.0 / static_cast<double>(ns));
  Vector w = Vector::Zero(nc);
  Vector a_prev = a, w_prev = w;
  const double step = 1.0 / std::max(lipschitz, 1e-12);
  double t_acc = 1.0;
  double best = std::numeric_limits<double>::infinity();
  int stall = 0;
  for (int iter = 0; iter < 20000; ++iter) {
    Vector r = xs * a.cwiseProduct(signs);
    if (nc > 0) r.noalias() += xc * w;
    const double f = r.squaredNorm();
    if (f < best * (1.0 - 1e-10)) {
      best = f;
      stall = 0;
    } else if (++stall > 60) {
      break;
    }
    Vector grad_a = 2.0 * signs.cwiseProduct(xs.transpose() * r);
    Vector a_next = a - step * grad_a;
    project_simplex(a_next);
    Vector w_next = w;
    if (nc > 0) {
      w_next.noalias() -= step * 2.0 * (xc.transpose() * r);
      project_l1_ball(w_next, xi);
    }
    // FISTA momentum with restart on objective increase.
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_acc * t_acc));
    const double mom = (t_acc - 1.0) / t_next;
    Vector a_mom = a_next + mom * (a_next - a_prev);
    project_simplex(a_mom);
    Vector w_mom = w_next;
    if (nc > 0) {
      w_mom += mom * (w_next - w_prev);
      project_l1_ball(w_mom, xi);
    }
    a_prev = a_next;
    w_prev = w_next;
    a = a_mom;
    w = w_mom;
    t_acc = t_next;
  }
  // Evaluate at the last proximal iterate (feasible by construction).
  Vector r = xs * a_prev.cwiseProduct(signs);
  if (nc > 0) r.noalias() += xc * w_prev;
  return std::min(best, r.squaredNorm());
}

}  // namespace

KappaBracket compatibility_factor(const StandardizedDesign& design, const std::vector<Index>& s_set,
                                  double xi, bool force_sampling, RngStream stream) {
  if (!(xi >= 1.0)) throw DomainError("xi must be at least 1");
  if (s_set.empty()) throw DomainError("S must be nonempty");
  for (Index j : s_set)
    if (j < 0 || j >= design.p()) throw DomainError("S index out of range");
  const Index n = design.n();
  const Index p = design.p();
  const Index s = static_cast<Index>(s_set.size());

  Matrix xs(n, s);
  for (Index i = 0; i < s; ++i) xs.col(i) = design.col(s_set[static_cast<std::size_t>(i)]);
  std::vector<char> in_s(static_cast<std::size_t>(p), 0);
  for (Index j : s_set) in_s[static_cast<std::size_t>(j)] = 1;
  Matrix xc(n, p - s);
  Index out = 0;
  for (Index j = 0; j < p; ++j)
    if (!in_s[static_cast<std::size_t>(j)]) xc.col(out++) = design.col(j);

  KappaBracket bracket;
  if (s <= 12 && !force_sampling) {
    const double lipschitz = 2.0 * top_gram_eigenvalue(design.X()) * 1.05;
    double best = std::numeric_limits<double>::infinity();
    const std::uint64_t patterns = 1ULL << static_cast<unsigned>(s);
    Vector signs(s);
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
      for (Index i = 0; i < s; ++i) signs[i] = (mask >> static_cast<unsigned>(i)) & 1 ? -1.0 : 1.0;
      best = std::min(best, solve_cone_piece(xs, xc, signs, xi, lipschitz));
    }
    bracket.upper = static_cast<double>(s) * best / static_cast<double>(n);
    bracket.lower = bracket.upper / (1.0 + 1e-4);
    bracket.exact_mode = true;
    return bracket;
  }

  // Sampling mode: feasible directions only, so the result is an upper bound.
  Rng rng(stream);
  double best = std::numeric_limits<double>::infinity();
  Vector us(s), w(p - s);
  for (int draw = 0; draw < 100000; ++draw) {
    rng.fill_normal(us);
    double norm1 = us.lpNorm<1>();
    if (norm1 == 0.0) continue;
    us /= norm1;
    rng.fill_normal(w);
    const double radius = rng.uniform() * xi;
    norm1 = w.lpNorm<1>();
    if (norm1 > 0.0) w *= radius / norm1;
    Vector r = xs * us + xc * w;
    best = std::min(best, r.squaredNorm());
  }
  bracket.upper = static_cast<double>(s) * best / static_cast<double>(n);
  bracket.lower = 0.0;
  bracket.exact_mode = false;
  return bracket;
}

namespace {

double count_subsets_up_to(Index pool, Index m) {
  double total = 0.0;
  double binom = 1.0;
  for (Index q = 0; q <= m; ++q) {
    total += binom;
    if (total > 2e6) return total;
    binom = binom * static_cast<double>(pool - q) / static_cast<double>(q + 1);
  }
  return total;
}

template <typename Visit>
void for_each_subset(const std::vector<Index>& pool, Index size, Visit&& visit) {
  std::vector<Index> chosen(static_cast<std::size_t>(size));
  // Lexicographic enumeration of index combinations.
  std::vector<Index> pos(static_cast<std::size_t>(size));
  std::iota(pos.begin(), pos.end(), 0);
  const Index total = static_cast<Index>(pool.size());
  if (size == 0) {
    visit(std::vector<Index>{});
    return;
  }
  if (size > total) return;
  for (;;) {
    for (Index i = 0; i < size; ++i)
      chosen[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(pos[static_cast<std::size_t>(i)])];
    visit(chosen);
    Index i = size - 1;
    while (i >= 0 && pos[static_cast<std::size_t>(i)] == total - size + i) --i;
    if (i < 0) break;
    ++pos[static_cast<std::size_t>(i)];
    for (Index k = i + 1; k < size; ++k)
      pos[static_cast<std::size_t>(k)] = pos[static_cast<std::size_t>(k - 1)] + 1;
  }
}

std::pair<double, double> block_eigs(const StandardizedDesign& design,
                                     const std::vector<Index>& cols) {
  const Index b = static_cast<Index>(cols.size());
  Matrix gram(b, b);
  const double n = static_cast<double>(design.n());
  for (Index i = 0; i < b; ++i)
    for (Index k = i; k < b; ++k) {
      const double value =
          design.col(cols[static_cast<std::size_t>(i)]).dot(design.col(cols[static_cast<std::size_t>(k)])) / n;
      gram(i, k) = value;
      gram(k, i) = value;
    }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
  return {solver.eigenvalues().minCoeff(), solver.eigenvalues().maxCoeff()};
}

}  // namespace

SparseEigen sparse_eigenvalues(const StandardizedDesign& design, const std::vector<Index>& s_set,
                               Index m, bool allow_sampling, RngStream stream) {
  for (Index j : s_set)
    if (j < 0 || j >= design.p()) throw DomainError("S index out of range");
  if (m < 0) throw DomainError("m must be nonnegative");
  const Index p = design.p();
  std::vector<char> in_s(static_cast<std::size_t>(p), 0);
  for (Index j : s_set) in_s[static_cast<std::size_t>(j)] = 1;
  std::vector<Index> complement;
  for (Index j = 0; j < p; ++j)
    if (!in_s[static_cast<std::size_t>(j)]) complement.push_back(j);

  const Index s = static_cast<Index>(s_set.size());
  const bool exact = s + m <= 16 &&
                     count_subsets_up_to(static_cast<Index>(complement.size()), m) <= 1e6;
  SparseEigen result;
  result.exact_mode = exact;
  if (!exact && !allow_sampling)
    throw SizeError("subset enumeration bounds exceeded; request sampling mode");

  result.phi_minus = std::numeric_limits<double>::infinity();
  result.phi_plus = 0.0;
  if (exact) {
    for (Index q = 0; q <= m; ++q) {
      for_each_subset(complement, q, [&](const std::vector<Index>& extra) {
        std::vector<Index> b = s_set;
        b.insert(b.end(), extra.begin(), extra.end());
        if (!b.empty()) result.phi_minus = std::min(result.phi_minus, block_eigs(design, b).first);
        if (!extra.empty())
          result.phi_plus = std::max(result.phi_plus, block_eigs(design, extra).second);
      });
    }
    if (s_set.empty() && m == 0) result.phi_minus = 0.0;
    return result;
  }

  Rng rng(stream);
  const Index pool = static_cast<Index>(complement.size());
  const Index size = std::min(m, pool);
  for (int draw = 0; draw < 10000; ++draw) {
    // Floyd's algorithm for a uniform size-m subset.
    std::vector<Index> pick;
    std::vector<char> used(static_cast<std::size_t>(pool), 0);
    for (Index i = pool - size; i < pool; ++i) {
      const Index r = static_cast<Index>(rng.uniform() * static_cast<double>(i + 1));
      const Index candidate = used[static_cast<std::size_t>(r)] ? i : r;
      used[static_cast<std::size_t>(candidate)] = 1;
      pick.push_back(complement[static_cast<std::size_t>(candidate)]);
    }
    std::sort(pick.begin(), pick.end());
    std::vector<Index> b = s_set;
    b.insert(b.end(), pick.begin(), pick.end());
    std::sort(b.begin(), b.end());
    if (!b.empty()) result.phi_minus = std::min(result.phi_minus, block_eigs(design, b).first);
    if (!pick.empty()) result.phi_plus = std::max(result.phi_plus, block_eigs(design, pick).second);
  }
  return result;
}

namespace {

std::pair<double, double> extreme_eigs_power(const Eigen::SparseMatrix<double>& m) {
  const Index p = m.rows();
  if (m.nonZeros() == 0) return {0.0, 0.0};
  // Row-sum bound makes both shifted operators PSD.
  double shift = 0.0;
  for (Index j = 0; j < p; ++j) {
    double row = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, j); it; ++it) row += std::abs(it.value());
    shift = std::max(shift, row);
  }
  auto run = [&](double sign_m) {
    Vector v = Vector::LinSpaced(p, 1.0, 2.0).normalized();
    double rayleigh = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 100000; ++iter) {
      Vector w = sign_m * (m * v) + shift * v;
      const double norm = w.norm();
      if (norm == 0.0) return 0.0;
      v = w / norm;
      rayleigh = v.dot(sign_m * (m * v)) + shift;
      if (std::abs(rayleigh - prev) <= 1e-9 * std::max(1.0, shift) && iter > 10) break;
      prev = rayleigh;
    }
    return rayleigh - shift;
  };
  const double eig_max = run(1.0);
  const double eig_min = -run(-1.0);
  return {eig_min, eig_max};
}

}  // namespace

ThresholdedGram thresholded_gram(const StandardizedDesign& design, double lambda1) {
  if (lambda1 < 0.0) throw DomainError("lambda1 must be nonnegative");
  const Index p = design.p();
  const double n = static_cast<double>(design.n());
  const Matrix gram = design.X().transpose() * design.X() / n;
  ThresholdedGram out;
  out.lambda1 = lambda1;
  std::vector<Eigen::Triplet<double>> entries;
  for (Index j = 0; j < p; ++j)
    for (Index k = 0; k < p; ++k)
      if (std::abs(gram(j, k)) >= lambda1) entries.emplace_back(j, k, gram(j, k));
  out.matrix.resize(p, p);
  out.matrix.setFromTriplets(entries.begin(), entries.end());
  const auto [lo, hi] = extreme_eigs_power(out.matrix);
  out.eig_min = lo;
  out.eig_max = hi;
  return out;
}

GramConditionReport gram_conditions(const ThresholdedGram& gram, double s, double xi) {
  GramConditionReport report;
  report.c_star = gram.eig_min;
  report.c_sup = gram.eig_max;
  if (report.c_star > 0.0) {
    report.cap_k = 2.0 * xi * xi * (report.c_sup / report.c_star + 0.5);
    report.kappa_condition =
        s * gram.lambda1 * (1.0 + xi) * (1.0 + xi) <= report.c_star / 2.0;
    report.eigen_condition =
        s * gram.lambda1 * (1.0 + report.cap_k) + gram.lambda1 <= report.c_star / 2.0;
    if (report.kappa_condition) report.implied_kappa_sq = report.c_star / 2.0;
  }
  return report;
}

OracleEstimate oracle_estimate(const StandardizedDesign& design, const Vector& y,
                               const Vector& true_beta, const Vector& true_eps, Index j) {
  const Index p = design.p();
  const Index n = design.n();
  if (n <= 3) throw DomainError("oracle estimator needs n > 3");
  if (j < 0 || j >= p) throw DomainError("column index out of range");
  Index lo = j - 1, hi = j + 1;
  if (j == 0) { lo = 0; hi = 2; }
  if (j == p - 1) { lo = p - 3; hi = p - 1; }
  std::vector<Index> window;
  for (Index k = std::max<Index>(lo, 0); k <= std::min<Index>(hi, p - 1); ++k) window.push_back(k);

  Matrix neighbors(n, static_cast<Index>(window.size()) - 1);
  Index out = 0;
  for (Index k : window)
    if (k != j) neighbors.col(out++) = design.col(k);
  ComplementProjector neighbor_proj(neighbors);
  const Vector z = neighbor_proj.residual(design.col(j));
  const double z_sq = z.squaredNorm();
  OracleEstimate est;
  est.z_norm = std::sqrt(z_sq);
  if (est.z_norm < 1e-10 * std::sqrt(static_cast<double>(n)))
    throw DomainError("degenerate oracle score for column " + std::to_string(j));

  Vector adjusted = y;
  for (Index k = 0; k < p; ++k) {
    bool inside = false;
    for (Index w : window) inside = inside || w == k;
    if (!inside && true_beta[k] != 0.0) adjusted.noalias() -= true_beta[k] * design.col(k);
  }
  est.beta_o = z.dot(adjusted) / z_sq;

  Matrix all_window(n, static_cast<Index>(window.size()));
  for (std::size_t i = 0; i < window.size(); ++i) all_window.col(static_cast<Index>(i)) = design.col(window[i]);
  est.sigma_o = ComplementProjector(all_window).residual(true_eps).norm() /
                std::sqrt(static_cast<double>(n));
  return est;
}

double capped_l1_sparsity(const Vector& beta, double sigma, Index n, Index p) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  const double scale = sigma * lambda_univ(n, p);
  double total = 0.0;
  for (Index j = 0; j < beta.size(); ++j) total += std::min(std::abs(beta[j]) / scale, 1.0);
  return total;
}

}  // namespace ldpe
