#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ldpe/lasso.hpp"
#include "ldpe/rng.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace ldpe;

namespace {

Matrix random_matrix(Index n, Index p, std::uint64_t seed, std::uint64_t id = 0) {
  Rng rng({seed, id});
  Matrix m(n, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i) m(i, j) = rng.normal();
  return m;
}

double soft(double x, double t) { return x > t ? x - t : (x < -t ? x + t : 0.0); }

}  // namespace

TEST_CASE("penalty above the gradient cap gives the zero solution") {
  const Matrix a = random_matrix(12, 5, 101);
  Rng rng({101, 1});
  Vector y(12);
  rng.fill_normal(y);
  const double lambda_max = (a.transpose() * y).cwiseAbs().maxCoeff() / 12.0;
  const LassoSolution sol = solve_lasso(a, y, lambda_max * 1.000001);
  CHECK(sol.converged);
  CHECK(sol.coefficients.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("orthogonal design reduces to soft thresholding") {
  const Index n = 16, q = 4;
  Matrix a = oracles::orthogonal_design(n, q);
  for (Index j = 0; j < q; ++j) a.col(j) *= std::sqrt(static_cast<double>(n)) / a.col(j).norm();
  Rng rng({102, 0});
  Vector y(n);
  rng.fill_normal(y);
  const double lambda = 0.2;
  const LassoSolution sol = solve_lasso(a, y, lambda);
  REQUIRE(sol.converged);
  for (Index k = 0; k < q; ++k) {
    const double uni = a.col(k).dot(y) / static_cast<double>(n);
    CHECK(sol.coefficients[k] == doctest::Approx(soft(uni, lambda)).epsilon(1e-9));
  }
}

TEST_CASE("random problems match the sign-enumeration oracle") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Matrix a = random_matrix(10, 4, 200 + seed);
    Rng rng({300 + seed, 0});
    Vector y(10);
    rng.fill_normal(y);
    const LassoSolution sol = solve_lasso(a, y, 0.3);
    REQUIRE(sol.converged);
    const Vector expected = oracles::brute_force_lasso(a, y, 0.3);
    for (Index k = 0; k < 4; ++k)
      CHECK(std::abs(sol.coefficients[k] - expected[k]) < 1e-6);
  }
}

TEST_CASE("warm start converges to the cold solution") {
  const Matrix a = random_matrix(20, 8, 401);
  Rng rng({402, 0});
  Vector y(20);
  rng.fill_normal(y);
  const LassoSolution cold = solve_lasso(a, y, 0.15);
  Vector warm = Vector::Constant(8, 0.4);
  const LassoSolution warmed = solve_lasso(a, y, 0.15, &warm);
  REQUIRE(cold.converged);
  REQUIRE(warmed.converged);
  for (Index k = 0; k < 8; ++k)
    CHECK(std::abs(cold.coefficients[k] - warmed.coefficients[k]) < 1e-6);
}

TEST_CASE("verify_kkt") {
  const Matrix a = random_matrix(14, 5, 501);
  Rng rng({502, 0});
  Vector y(14);
  rng.fill_normal(y);
  y += 2.0 * a.col(1) - 1.5 * a.col(3);  // guarantees active coefficients
  const double lambda = 0.25;
  LassoSolution sol = solve_lasso(a, y, lambda);
  REQUIRE(sol.converged);

  SUBCASE("exact solution satisfies both tolerances") {
    const KktReport report = verify_kkt(sol, a, y);
    CHECK(report.stationarity_violation <= 1e-6);
    CHECK(report.bound_violation <= 1e-6);
  }
  SUBCASE("zero vector below lambda_max violates the bound") {
    LassoSolution zero = sol;
    zero.coefficients.setZero();
    zero.lambda = (a.transpose() * y).cwiseAbs().maxCoeff() / 14.0 * 0.5;
    const KktReport report = verify_kkt(zero, a, y);
    CHECK(report.bound_violation > 0.0);
  }
  SUBCASE("perturbing one nonzero coefficient moves stationarity proportionally") {
    Index nz = -1;
    for (Index k = 0; k < 5; ++k)
      if (sol.coefficients[k] != 0.0) nz = k;
    REQUIRE(nz >= 0);
    LassoSolution bent = sol;
    bent.coefficients[nz] += 1e-2;
    const KktReport report = verify_kkt(bent, a, y);
    // Expected first-order move: delta · (column Gram diagonal)/n.
    const double predicted = 1e-2 * a.col(nz).squaredNorm() / 14.0;
    CHECK(report.stationarity_violation > predicted / 10.0);
    CHECK(report.stationarity_violation < predicted * 10.0);
  }
}

TEST_CASE("path: null point at lambda_max") {
  const StandardizedDesign d = standardize_columns(random_matrix(12, 6, 601));
  const Index j = 2;
  Vector corr = d.X().transpose() * d.col(j);
  corr[j] = 0.0;
  const Vector grid = default_grid_for_column(d, j, 5, 0.5);
  const LassoPath path = lasso_path_for_column(d, j, grid);
  const PathPoint& top = path.points.front();
  CHECK(top.gamma.cwiseAbs().maxCoeff() == 0.0);
  CHECK((top.z - d.col(j)).norm() < 1e-12);
  CHECK(top.z_norm == doctest::Approx(std::sqrt(12.0)));
  CHECK(top.tau == doctest::Approx(1.0 / std::sqrt(12.0)));
  CHECK(top.eta == doctest::Approx(corr.cwiseAbs().maxCoeff() / std::sqrt(12.0)));
}

TEST_CASE("path: eta equals n*lambda/znorm once gamma is nonzero") {
  const StandardizedDesign d = standardize_columns(random_matrix(30, 10, 602));
  const LassoPath path = lasso_path_for_column(d, 0, default_grid_for_column(d, 0));
  int checked = 0;
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const PathPoint& pt = path.points[i];
    if (pt.degenerate || pt.gamma.cwiseAbs().maxCoeff() == 0.0) continue;
    const double expected = 30.0 * pt.lambda / pt.z_norm;
    CHECK(pt.eta == doctest::Approx(expected).epsilon(1e-6));
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("path: orthogonal columns give flat eta=0, tau=1/sqrt(n)") {
  const Index n = 16, p = 8;
  Matrix m = oracles::orthogonal_design(n, p);
  const StandardizedDesign d = standardize_columns(m);
  const Vector grid = geometric_grid(1.0, 20, 1e-2);
  const LassoPath path = lasso_path_for_column(d, 3, grid);
  for (const PathPoint& pt : path.points) {
    CHECK(pt.eta < 1e-10);
    CHECK(pt.tau == doctest::Approx(1.0 / std::sqrt(static_cast<double>(n))).epsilon(1e-10));
  }
}

TEST_CASE("path properties across random designs") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const StandardizedDesign d = standardize_columns(random_matrix(20, 12, 700 + seed));
    const Index j = static_cast<Index>(seed % 12);
    const LassoPath path = lasso_path_for_column(d, j, default_grid_for_column(d, j));
    double prev_eta = std::numeric_limits<double>::infinity();
    double prev_norm = std::numeric_limits<double>::infinity();
    for (const PathPoint& pt : path.points) {
      if (pt.degenerate) continue;
      CHECK(pt.eta <= prev_eta + 1e-8);
      CHECK(pt.z_norm <= prev_norm + 1e-8);
      CHECK(pt.tau <= 1.0 / pt.z_norm + 1e-10);
      // KKT from stored vectors.
      const double stat = std::abs(d.col(j).dot(pt.z));
      (void)stat;
      Vector corr = d.X().transpose() * pt.z / 20.0;
      corr[j] = 0.0;
      CHECK(corr.cwiseAbs().maxCoeff() <= pt.lambda + 1e-6);
      prev_eta = pt.eta;
      prev_norm = pt.z_norm;
    }
  }
}

TEST_CASE("solution invariant under predictor permutation") {
  const Matrix a = random_matrix(15, 6, 800);
  Rng rng({801, 0});
  Vector y(15);
  rng.fill_normal(y);
  const LassoSolution base = solve_lasso(a, y, 0.2);
  std::vector<Index> perm = {3, 0, 5, 1, 4, 2};
  Matrix shuffled(15, 6);
  for (Index k = 0; k < 6; ++k) shuffled.col(k) = a.col(perm[static_cast<std::size_t>(k)]);
  const LassoSolution permuted = solve_lasso(shuffled, y, 0.2);
  for (Index k = 0; k < 6; ++k)
    CHECK(std::abs(permuted.coefficients[k] -
                   base.coefficients[perm[static_cast<std::size_t>(k)]]) < 1e-10);
}

TEST_CASE("grid constructor validates") {
  CHECK_THROWS_AS(geometric_grid(-1.0, 10, 0.5), DomainError);
  CHECK_THROWS_AS(geometric_grid(1.0, 10, 1.5), DomainError);
  const Vector g = geometric_grid(2.0, 100, 1e-3);
  CHECK(g.size() == 100);
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[99] == doctest::Approx(2e-3));
  for (Index i = 0; i + 1 < g.size(); ++i) CHECK(g[i] > g[i + 1]);
}
