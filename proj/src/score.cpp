#include "ldpe/score.hpp"

#include "ldpe/lasso.hpp"
#include "ldpe/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace ldpe {

namespace {

struct LeanPoint {
  double lambda = 0.0;
  double z_norm = 0.0;
  double xjz = 0.0;
  double eta = 0.0;
  double tau = 0.0;
  bool degenerate = false;
  bool converged = true;
  Vector z;
};

// Walks the path of column j of x (with Gram gram = xᵀx), largest λ first.
std::vector<LeanPoint> lean_path(const Matrix& x, const Matrix& gram, Index j,
                                 const Vector& grid) {
  const Index n = x.rows();
  const Index p = x.cols();
  GramLassoSolver solver(gram, gram.col(j), n);
  std::vector<LeanPoint> points;
  points.reserve(static_cast<std::size_t>(grid.size()));
  for (Index i = 0; i < grid.size(); ++i) {
    LeanPoint pt;
    pt.lambda = grid[i];
    pt.converged = solver.solve(grid[i], j, 100000, 1e-8, 2e-7);
    solver.refresh_gradient();
    const Vector& gamma = solver.gamma();
    Vector z = x.col(j);
    for (Index k = 0; k < p; ++k)
      if (gamma[k] != 0.0) z.noalias() -= gamma[k] * x.col(k);
    pt.z = std::move(z);
    pt.z_norm = pt.z.norm();
    const Vector& g = solver.gradient();
    double max_corr = 0.0;
    for (Index k = 0; k < p; ++k)
      if (k != j) max_corr = std::max(max_corr, std::abs(g[k]));
    pt.xjz = g[j];
    pt.eta = pt.z_norm > 0.0 ? max_corr / pt.z_norm : 0.0;
    pt.degenerate = std::abs(pt.xjz) < 1e-10 * static_cast<double>(n);
    pt.tau = pt.degenerate ? std::numeric_limits<double>::infinity() : pt.z_norm / std::abs(pt.xjz);
    points.push_back(std::move(pt));
  }
  return points;
}

}  // namespace

ScoreBuilder::ScoreBuilder(const StandardizedDesign& design, ScoreSettings settings,
                           const Matrix* gram)
    : design_(design), settings_(settings) {
  if (gram != nullptr) {
    gram_ = gram;
  } else {
    owned_gram_ = design.X().transpose() * design.X();
    gram_ = &owned_gram_;
  }
  eta_default_ = settings_.eta_star_default > 0.0
                     ? settings_.eta_star_default
                     : std::sqrt(2.0 * std::log(static_cast<double>(design.p())));
}

ScoreVector ScoreBuilder::run_table1(const Matrix& x, const Matrix& gram, Index j) const {
  const double n = static_cast<double>(x.rows());
  double lambda_max = 0.0;
  for (Index k = 0; k < gram.cols(); ++k)
    if (k != j) lambda_max = std::max(lambda_max, std::abs(gram(k, j)) / n);
  lambda_max *= 1.0 + 1e-10;  // tie guard, see default_grid_for_column
  const Vector grid = geometric_grid(lambda_max > 1e-12 ? lambda_max : 1.0, settings_.grid_points,
                                     settings_.grid_ratio);
  std::vector<LeanPoint> points = lean_path(x, gram, j, grid);

  auto usable = [](const LeanPoint& pt) { return !pt.degenerate && pt.converged; };
  const Index count = static_cast<Index>(points.size());

  bool any_usable = false;
  for (const auto& pt : points) any_usable = any_usable || usable(pt);
  if (!any_usable) throw AllDegenerateError(j);

  ScoreVector score;
  score.j = j;
  score.eta_star = eta_default_;

  // Step 1: certify or adjust the bias-factor bound, then take the largest
  // feasible λ to fix the reference noise factor τ*.
  bool feasible = false;
  for (const auto& pt : points)
    if (usable(pt) && pt.eta <= score.eta_star) feasible = true;
  if (!feasible) {
    double min_eta = std::numeric_limits<double>::infinity();
    for (const auto& pt : points)
      if (usable(pt)) min_eta = std::min(min_eta, pt.eta);
    score.eta_star = (1.0 + settings_.kappa1) * min_eta;
    score.eta_star_adjusted = true;
  }
  Index step1 = -1;
  for (Index i = 0; i < count; ++i) {  // grid is descending: first hit = largest λ
    const auto& pt = points[static_cast<std::size_t>(i)];
    if (usable(pt) && pt.eta <= score.eta_star) {
      step1 = i;
      break;
    }
  }
  const double tau_star = points[static_cast<std::size_t>(step1)].tau;
  score.eta_star = points[static_cast<std::size_t>(step1)].eta;

  // Step 2: smallest λ whose noise factor stays within (1+κ₀)·τ*.
  Index step2 = step1;
  for (Index i = count - 1; i >= step1; --i) {
    const auto& pt = points[static_cast<std::size_t>(i)];
    if (usable(pt) && pt.tau <= (1.0 + settings_.kappa0) * tau_star) {
      step2 = i;
      break;
    }
  }
  auto& chosen = points[static_cast<std::size_t>(step2)];
  score.lambda_j = chosen.lambda;
  score.z = std::move(chosen.z);
  score.eta = chosen.eta;
  score.tau = chosen.tau;
  score.zx = chosen.xjz;
  return score;
}

void ScoreBuilder::attach_original_factors(ScoreVector& score, Index j) const {
  const Vector corr = design_.X().transpose() * score.z;
  const double z_norm = score.z.norm();
  double max_corr = 0.0;
  for (Index k = 0; k < corr.size(); ++k)
    if (k != j) max_corr = std::max(max_corr, std::abs(corr[k]));
  score.zx = corr[j];
  if (std::abs(score.zx) < 1e-10 * static_cast<double>(design_.n())) throw AllDegenerateError(j);
  score.eta = z_norm > 0.0 ? max_corr / z_norm : 0.0;
  score.tau = z_norm / std::abs(score.zx);
}

ScoreVector ScoreBuilder::lasso_score(Index j) const {
  if (j < 0 || j >= design_.p()) throw DomainError("column index out of range");
  return run_table1(design_.X(), *gram_, j);
}

ScoreVector ScoreBuilder::restricted_score(Index j, Index m) const {
  if (j < 0 || j >= design_.p()) throw DomainError("column index out of range");
  if (m < 1 || m >= design_.n() - 1) throw DomainError("restricted m must satisfy 1 ≤ m < n−1");
  const Index p = design_.p();
  // K_{j,m}: the m largest |x_jᵀx_k|, k ≠ j, ties broken by ascending index.
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(p - 1));
  for (Index k = 0; k < p; ++k)
    if (k != j) order.push_back(k);
  const auto& gram = *gram_;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    const double ca = std::abs(gram(a, j));
    const double cb = std::abs(gram(b, j));
    if (ca != cb) return ca > cb;
    return a < b;
  });
  const Index take = std::min<Index>(m, static_cast<Index>(order.size()));
  std::vector<Index> restricted(order.begin(), order.begin() + take);
  std::sort(restricted.begin(), restricted.end());

  Matrix basis(design_.n(), take);
  for (Index i = 0; i < take; ++i) basis.col(i) = design_.col(restricted[static_cast<std::size_t>(i)]);
  ComplementProjector projector(basis);
  const Matrix projected = projector.residual_matrix(design_.X());
  // Gram of the projected columns as a rank-m downdate of the shared Gram.
  Matrix proj_gram = *gram_;
  if (projector.rank() > 0) {
    const Matrix w = projector.q().transpose() * design_.X();
    proj_gram.noalias() -= w.transpose() * w;
  }

  ScoreVector score = run_table1(projected, proj_gram, j);
  score.restricted_set = std::move(restricted);
  score.eta_projected = score.eta;
  score.tau_projected = score.tau;
  attach_original_factors(score, j);
  return score;
}

ScoreVector ScoreBuilder::projection_score(Index j) const {
  if (j < 0 || j >= design_.p()) throw DomainError("column index out of range");
  Matrix others(design_.n(), design_.p() - 1);
  Index out = 0;
  for (Index k = 0; k < design_.p(); ++k)
    if (k != j) others.col(out++) = design_.col(k);
  ComplementProjector projector(others);
  ScoreVector score;
  score.j = j;
  score.z = projector.residual(design_.col(j));
  score.lambda_j = 0.0;
  score.eta_star = eta_default_;
  attach_original_factors(score, j);
  return score;
}

ScoreVector build_score(const StandardizedDesign& design, Index j, ScoreSettings settings) {
  return ScoreBuilder(design, settings).lasso_score(j);
}

ScoreVector build_restricted_score(const StandardizedDesign& design, Index j, Index m,
                                   ScoreSettings settings) {
  return ScoreBuilder(design, settings).restricted_score(j, m);
}

ScoreSet build_all_scores(const StandardizedDesign& design, ScoreSettings settings, ScoreKind kind,
                          Index restricted_m, int threads, const Matrix* gram) {
  ScoreBuilder builder(design, settings, gram);
  ScoreSet set;
  set.design_hash = design_hash(design);
  set.kind = kind;
  set.restricted_m = kind == ScoreKind::restricted ? restricted_m : 0;
  set.settings = settings;
  set.scores.resize(static_cast<std::size_t>(design.p()));
  parallel_for(design.p(), threads, [&](Index j) {
    auto& slot = set.scores[static_cast<std::size_t>(j)];
    try {
      switch (kind) {
        case ScoreKind::lasso_relaxed: slot = builder.lasso_score(j); break;
        case ScoreKind::restricted: slot = builder.restricted_score(j, restricted_m); break;
        case ScoreKind::exact_projection: slot = builder.projection_score(j); break;
      }
    } catch (const Error& e) {
      slot = ScoreVector{};
      slot.j = j;
      slot.valid = false;
      slot.error = e.what();
    }
  });
  return set;
}

namespace {

constexpr char kCacheMagic[8] = {'L', 'D', 'P', 'E', 'S', 'C', '0', '1'};

template <typename T>
void put(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw IoError("truncated score cache");
  return value;
}

}  // namespace

void save_scores(const std::string& path, const ScoreSet& scores) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp + " for writing");
    os.write(kCacheMagic, sizeof(kCacheMagic));
    put(os, scores.design_hash);
    put(os, static_cast<std::int32_t>(scores.kind));
    put(os, static_cast<std::int64_t>(scores.restricted_m));
    put(os, scores.settings.eta_star_default);
    put(os, scores.settings.kappa0);
    put(os, scores.settings.kappa1);
    put(os, static_cast<std::int32_t>(scores.settings.grid_points));
    put(os, scores.settings.grid_ratio);
    put(os, static_cast<std::int64_t>(scores.scores.size()));
    for (const auto& s : scores.scores) {
      put(os, static_cast<std::int64_t>(s.j));
      put(os, static_cast<std::uint8_t>(s.valid ? 1 : 0));
      if (!s.valid) {
        put(os, static_cast<std::int64_t>(s.error.size()));
        os.write(s.error.data(), static_cast<std::streamsize>(s.error.size()));
        continue;
      }
      put(os, s.lambda_j);
      put(os, s.eta);
      put(os, s.tau);
      put(os, s.zx);
      put(os, s.eta_star);
      put(os, static_cast<std::uint8_t>(s.eta_star_adjusted ? 1 : 0));
      put(os, s.eta_projected);
      put(os, s.tau_projected);
      put(os, static_cast<std::int64_t>(s.restricted_set.size()));
      for (Index k : s.restricted_set) put(os, static_cast<std::int64_t>(k));
      put(os, static_cast<std::int64_t>(s.z.size()));
      os.write(reinterpret_cast<const char*>(s.z.data()),
               static_cast<std::streamsize>(sizeof(double) * s.z.size()));
    }
    if (!os) throw IoError("write failure on " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

ScoreSet load_scores(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || !std::equal(magic, magic + 8, kCacheMagic)) throw IoError("not a score cache file");
  ScoreSet set;
  set.design_hash = get<std::uint64_t>(is);
  set.kind = static_cast<ScoreKind>(get<std::int32_t>(is));
  set.restricted_m = static_cast<Index>(get<std::int64_t>(is));
  set.settings.eta_star_default = get<double>(is);
  set.settings.kappa0 = get<double>(is);
  set.settings.kappa1 = get<double>(is);
  set.settings.grid_points = get<std::int32_t>(is);
  set.settings.grid_ratio = get<double>(is);
  const auto count = get<std::int64_t>(is);
  set.scores.resize(static_cast<std::size_t>(count));
  for (auto& s : set.scores) {
    s.j = static_cast<Index>(get<std::int64_t>(is));
    const bool valid = get<std::uint8_t>(is) != 0;
    s.valid = valid;
    if (!valid) {
      const auto len = get<std::int64_t>(is);
      s.error.resize(static_cast<std::size_t>(len));
      is.read(s.error.data(), len);
      if (!is) throw IoError("truncated score cache");
      continue;
    }
    s.lambda_j = get<double>(is);
    s.eta = get<double>(is);
    s.tau = get<double>(is);
    s.zx = get<double>(is);
    s.eta_star = get<double>(is);
    s.eta_star_adjusted = get<std::uint8_t>(is) != 0;
    s.eta_projected = get<double>(is);
    s.tau_projected = get<double>(is);
    const auto rs = get<std::int64_t>(is);
    s.restricted_set.resize(static_cast<std::size_t>(rs));
    for (auto& k : s.restricted_set) k = static_cast<Index>(get<std::int64_t>(is));
    const auto zn = get<std::int64_t>(is);
    s.z.resize(zn);
    is.read(reinterpret_cast<char*>(s.z.data()),
            static_cast<std::streamsize>(sizeof(double) * zn));
    if (!is) throw IoError("truncated score cache");
  }
  return set;
}

ScoreSet load_scores_for(const std::string& path, const StandardizedDesign& design) {
  ScoreSet set = load_scores(path);
  if (set.design_hash != design_hash(design)) throw ScoreMismatchError();
  return set;
}

}  // namespace ldpe
