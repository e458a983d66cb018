#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ldpe/diagnostics.hpp"
#include "ldpe/rng.hpp"
#include "ldpe/scaled_lasso.hpp"
#include "ldpe/sim.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace ldpe;

namespace {

StandardizedDesign random_design(Index n, Index p, std::uint64_t seed) {
  Rng rng({seed, 0});
  Matrix m(n, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i) m(i, j) = rng.normal();
  return standardize_columns(m);
}

}  // namespace

TEST_CASE("compatibility factor: orthogonal design gives 1") {
  const StandardizedDesign d = standardize_columns(oracles::orthogonal_design(16, 6));
  for (double xi : {1.0, 2.0, 5.0}) {
    const KappaBracket b = compatibility_factor(d, {0, 3}, xi);
    CHECK(b.exact_mode);
    CHECK(b.upper == doctest::Approx(1.0).epsilon(5e-4));
    CHECK(b.lower <= b.upper);
  }
}

TEST_CASE("compatibility factor: duplicated column collapses the cone") {
  Rng rng({1400, 0});
  Matrix m(20, 5);
  for (Index j = 0; j < 5; ++j)
    for (Index i = 0; i < 20; ++i) m(i, j) = rng.normal();
  m.col(4) = m.col(0);  // copy of an S column sits outside S
  const StandardizedDesign d = standardize_columns(m);
  const KappaBracket b = compatibility_factor(d, {0, 1}, 4.0);
  CHECK(b.upper < 5e-3);
}

TEST_CASE("compatibility factor matches the grid oracle on small cones") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const StandardizedDesign d = random_design(20, 4, 1401 + seed);
    const std::vector<Index> s_set = {0, 2};
    const double xi = 2.0;
    const KappaBracket b = compatibility_factor(d, s_set, xi);
    const double oracle = oracles::grid_kappa_sq(d.X(), s_set, xi);
    CHECK(std::abs(b.upper - oracle) < 1e-3 * std::max(oracle, 1e-8));
    CHECK(b.lower <= oracle * (1.0 + 1e-6));
  }
  // |S| = 1 instances.
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const StandardizedDesign d = random_design(15, 3, 1410 + seed);
    const KappaBracket b = compatibility_factor(d, {1}, 3.0);
    const double oracle = oracles::grid_kappa_sq(d.X(), {1}, 3.0);
    CHECK(std::abs(b.upper - oracle) < 1e-3 * std::max(oracle, 1e-8));
  }
}

TEST_CASE("compatibility factor: sampling upper bound respects the exact bracket") {
  const StandardizedDesign d = random_design(25, 6, 1402);
  const std::vector<Index> s_set = {1, 4};
  const KappaBracket exact = compatibility_factor(d, s_set, 2.0);
  const KappaBracket sampled = compatibility_factor(d, s_set, 2.0, /*force_sampling=*/true);
  CHECK(!sampled.exact_mode);
  CHECK(sampled.lower == 0.0);
  CHECK(sampled.upper >= exact.lower);
}

TEST_CASE("compatibility factor domain checks") {
  const StandardizedDesign d = random_design(10, 4, 1403);
  CHECK_THROWS_AS(compatibility_factor(d, {0}, 0.5), DomainError);
  CHECK_THROWS_AS(compatibility_factor(d, {}, 2.0), DomainError);
}

TEST_CASE("sparse eigenvalues") {
  SUBCASE("orthogonal design gives (1,1)") {
    const StandardizedDesign d = standardize_columns(oracles::orthogonal_design(16, 8));
    const SparseEigen eig = sparse_eigenvalues(d, {0, 2}, 3);
    CHECK(eig.exact_mode);
    CHECK(eig.phi_minus == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(eig.phi_plus == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("duplicated pair outside S pushes phi_plus to 2") {
    Rng rng({1404, 0});
    Matrix m(20, 6);
    for (Index j = 0; j < 6; ++j)
      for (Index i = 0; i < 20; ++i) m(i, j) = rng.normal();
    m.col(5) = m.col(4);
    const StandardizedDesign d = standardize_columns(m);
    const SparseEigen eig = sparse_eigenvalues(d, {0}, 2);
    CHECK(eig.phi_plus >= 2.0 - 1e-8);
  }
  SUBCASE("random design matches the Jacobi enumeration oracle") {
    const StandardizedDesign d = random_design(30, 10, 1405);
    const std::vector<Index> s_set = {1, 7};
    const Index m = 2;
    const SparseEigen eig = sparse_eigenvalues(d, s_set, m);
    REQUIRE(eig.exact_mode);

    // Oracle: enumerate every B directly with the Jacobi eigensolver.
    const Matrix gram = d.X().transpose() * d.X() / 30.0;
    double phi_minus = std::numeric_limits<double>::infinity();
    double phi_plus = 0.0;
    std::vector<Index> comp;
    for (Index j = 0; j < 10; ++j)
      if (j != 1 && j != 7) comp.push_back(j);
    const auto block = [&](const std::vector<Index>& cols) {
      Matrix b(cols.size(), cols.size());
      for (std::size_t r = 0; r < cols.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c) b(r, c) = gram(cols[r], cols[c]);
      return oracles::jacobi_eigenvalues(b);
    };
    // |B\S| = 0, 1, 2 supersets.
    phi_minus = std::min(phi_minus, block({1, 7}).front());
    for (std::size_t a = 0; a < comp.size(); ++a) {
      phi_minus = std::min(phi_minus, block({1, 7, comp[a]}).front());
      phi_plus = std::max(phi_plus, block({comp[a]}).back());
      for (std::size_t b2 = a + 1; b2 < comp.size(); ++b2) {
        phi_minus = std::min(phi_minus, block({1, 7, comp[a], comp[b2]}).front());
        phi_plus = std::max(phi_plus, block({comp[a], comp[b2]}).back());
      }
    }
    CHECK(std::abs(eig.phi_minus - phi_minus) < 1e-8);
    CHECK(std::abs(eig.phi_plus - phi_plus) < 1e-8);
  }
  SUBCASE("monotone in m") {
    const StandardizedDesign d = random_design(25, 9, 1406);
    double prev_minus = std::numeric_limits<double>::infinity();
    double prev_plus = 0.0;
    for (Index m = 0; m <= 3; ++m) {
      const SparseEigen eig = sparse_eigenvalues(d, {0, 4}, m);
      CHECK(eig.phi_minus <= prev_minus + 1e-10);
      CHECK(eig.phi_plus >= prev_plus - 1e-10);
      prev_minus = eig.phi_minus;
      prev_plus = eig.phi_plus;
    }
  }
  SUBCASE("size guard and sampling fallback") {
    const StandardizedDesign d = random_design(20, 60, 1407);
    std::vector<Index> big_s;
    for (Index j = 0; j < 12; ++j) big_s.push_back(j);
    CHECK_THROWS_AS(sparse_eigenvalues(d, big_s, 8), SizeError);
    const SparseEigen sampled = sparse_eigenvalues(d, big_s, 8, /*allow_sampling=*/true);
    CHECK(!sampled.exact_mode);
    CHECK(sampled.phi_minus <= sampled.phi_plus + 1.0);  // sanity only
  }
}

TEST_CASE("thresholded Gram") {
  SUBCASE("lambda1 = 0 keeps the full Gram with unit diagonal") {
    const StandardizedDesign d = random_design(20, 7, 1408);
    const ThresholdedGram g = thresholded_gram(d, 0.0);
    CHECK(g.matrix.nonZeros() == 49);
    for (Index j = 0; j < 7; ++j) CHECK(g.matrix.coeff(j, j) == doctest::Approx(1.0));
    CHECK(g.eig_max >= 1.0 - 1e-9);
    CHECK(g.eig_min <= 1.0 + 1e-9);
  }
  SUBCASE("lambda1 > 1 kills everything including the diagonal") {
    const StandardizedDesign d = random_design(20, 7, 1409);
    const ThresholdedGram g = thresholded_gram(d, 1.0 + 1e-9);
    CHECK(g.matrix.nonZeros() == 0);
    CHECK(g.eig_min == 0.0);
    CHECK(g.eig_max == 0.0);
  }
  SUBCASE("AR(1) extremes match the thresholded-population oracle") {
    // Oracle: at lambda1 = 4 sqrt(log(p)/n) only lag 1 survives (rho = 0.5, so
    // rho^2 = 0.25 < 0.3956); the population matrix after thresholding is the
    // tridiagonal Toeplitz with eigenvalues 1 + 2 rho cos(k pi/(p+1)).
    const Index n = 400, p = 50;
    const double rho = 0.5;
    const double lambda1 =
        4.0 * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
    REQUIRE(rho >= lambda1);
    REQUIRE(rho * rho < lambda1);
    const double pop_min =
        1.0 + 2.0 * rho * std::cos(M_PI * static_cast<double>(p) / static_cast<double>(p + 1));
    const double pop_max = 1.0 + 2.0 * rho * std::cos(M_PI / static_cast<double>(p + 1));
    double mean_min = 0.0, mean_max = 0.0;
    const int seeds = 10;
    for (int seed = 0; seed < seeds; ++seed) {
      auto [raw, design] =
          generate_design(n, p, rho, {static_cast<std::uint64_t>(seed), 400});
      const ThresholdedGram g = thresholded_gram(design, lambda1);
      mean_min += g.eig_min / seeds;
      mean_max += g.eig_max / seeds;
    }
    CHECK(std::abs(mean_min - pop_min) < 0.15);
    CHECK(std::abs(mean_max - pop_max) < 0.15);
  }
  SUBCASE("condition report") {
    const StandardizedDesign d = standardize_columns(oracles::orthogonal_design(32, 6));
    const ThresholdedGram g = thresholded_gram(d, 0.5);
    const GramConditionReport rep = gram_conditions(g, 1.0, 2.0);
    CHECK(rep.c_star == doctest::Approx(1.0).epsilon(1e-6));
    // s·λ₁·(1+ξ)² = 4.5 > 0.5: the kappa condition must fail here.
    CHECK(!rep.kappa_condition);
    const GramConditionReport rep2 = gram_conditions(g, 0.05, 2.0);
    CHECK(rep2.kappa_condition);
    CHECK(rep2.implied_kappa_sq == doctest::Approx(rep2.c_star / 2.0));
  }
}

TEST_CASE("oracle estimator") {
  const Index n = 30, p = 12;
  const StandardizedDesign d = random_design(n, p, 1410);
  Rng rng({1411, 0});
  Vector beta(p);
  rng.fill_normal(beta);

  SUBCASE("zero noise reproduces beta exactly") {
    const Vector y = d.X() * beta;
    const Vector eps = Vector::Zero(n);
    for (Index j : {Index(0), Index(5), Index(11)}) {
      const OracleEstimate est = oracle_estimate(d, y, beta, eps, j);
      CHECK(std::abs(est.beta_o - beta[j]) < 1e-10);
      CHECK(est.sigma_o == 0.0);
    }
  }
  SUBCASE("sigma is a contraction of ||eps||/sqrt(n)") {
    Vector eps(n);
    rng.fill_normal(eps);
    const Vector y = d.X() * beta + eps;
    const double cap = eps.norm() / std::sqrt(static_cast<double>(n));
    for (Index j = 0; j < p; ++j) {
      const OracleEstimate est = oracle_estimate(d, y, beta, eps, j);
      CHECK(est.sigma_o <= cap + 1e-12);
      CHECK(est.sigma_o > 0.0);
    }
  }
  SUBCASE("orthogonal interior column gives the univariate fit") {
    const StandardizedDesign od = standardize_columns(oracles::orthogonal_design(24, 8));
    Vector ob(8);
    rng.fill_normal(ob);
    Vector oe(24);
    rng.fill_normal(oe);
    const Vector oy = od.X() * ob + oe;
    const Index j = 4;
    Vector adjusted = oy;
    for (Index k = 0; k < 8; ++k)
      if (k < j - 1 || k > j + 1) adjusted -= ob[k] * od.col(k);
    const OracleEstimate est = oracle_estimate(od, oy, ob, oe, j);
    CHECK(std::abs(est.beta_o - od.col(j).dot(adjusted) / 24.0) < 1e-10);
  }
}

TEST_CASE("capped-l1 sparsity") {
  CHECK(capped_l1_sparsity(Vector::Zero(10), 1.0, 100, 10) == 0.0);

  SUBCASE("paper constants at p = 3000, n = 200") {
    const Vector beta2 = generate_beta(3000, 2.0, 200);
    const Vector beta1 = generate_beta(3000, 1.0, 200);
    CHECK(std::abs(capped_l1_sparsity(beta2, 1.0, 200, 3000) - 8.93) < 0.01);
    CHECK(std::abs(capped_l1_sparsity(beta1, 1.0, 200, 3000) - 29.24) < 0.01);
  }
}
