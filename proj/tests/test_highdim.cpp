#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "signcorr/distributions.hpp"
#include "signcorr/estimators.hpp"
#include "signcorr/highdim.hpp"
#include "signcorr/rng.hpp"

using namespace signcorr;

namespace {

DataMatrix independent_columns(std::size_t n, std::size_t p, std::uint64_t seed) {
  RandomStream s(seed);
  DataMatrix d(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) d(i, j) = s.normal();
  }
  return d;
}

}  // namespace

TEST_CASE("pairwise p=2 equals the bivariate estimator") {
  const auto data = sample_normal2(sigma_from_rho(0.5, 1.0, 1.0), 200, SeedSpec(1));
  PairwiseOptions opt;
  opt.estimator = EstimatorId::SpatialSign;
  const CorrMatrix m = pairwise_corr_matrix(data, opt);
  CHECK(m.p == 2);
  CHECK(m.at(0, 0) == 1.0);
  CHECK(m.at(1, 1) == 1.0);
  CHECK(m.at(0, 1) == spatial_sign_corr(data).value);
  CHECK(m.at(0, 1) == m.at(1, 0));
}

TEST_CASE("independent columns stay near zero") {
  const auto data = independent_columns(10000, 5, 77);
  PairwiseOptions opt;
  opt.estimator = EstimatorId::SpatialSign;
  const CorrMatrix m = pairwise_corr_matrix(data, opt);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      if (i != j) CHECK(std::abs(m.at(i, j)) <= 0.05);
    }
  }
}

TEST_CASE("p > n works and is permutation equivariant") {
  const auto data = independent_columns(50, 60, 5);
  PairwiseOptions opt;
  opt.estimator = EstimatorId::Kendall;
  const CorrMatrix m = pairwise_corr_matrix(data, opt);
  CHECK(m.p == 60);
  for (std::size_t i = 0; i < 60; ++i) CHECK(m.at(i, i) == 1.0);

  // Swap two columns; the matrix rows/columns swap identically.
  DataMatrix swapped = data;
  for (std::size_t i = 0; i < 50; ++i) {
    std::swap(swapped(i, 3), swapped(i, 7));
  }
  const CorrMatrix ms = pairwise_corr_matrix(swapped, opt);
  for (std::size_t i = 0; i < 60; ++i) {
    const auto map = [](std::size_t k) { return k == 3 ? 7 : (k == 7 ? 3 : k); };
    for (std::size_t j = 0; j < 60; ++j) {
      CHECK(ms.at(i, j) == m.at(map(i), map(j)));
    }
  }
}

TEST_CASE("degenerate pairs fall back to zero with warnings") {
  DataMatrix d = independent_columns(30, 3, 9);
  for (std::size_t i = 0; i < 30; ++i) d(i, 2) = 4.2;  // constant column
  PairwiseOptions opt;
  opt.estimator = EstimatorId::Pearson;
  const CorrMatrix m = pairwise_corr_matrix(d, opt);
  CHECK(m.at(0, 2) == 0.0);
  CHECK(m.at(1, 2) == 0.0);
  REQUIRE(m.warnings.size() == 2);
  CHECK(m.warnings[0].j == 2);
}

TEST_CASE("eig_sym on a known 3x3") {
  // [[2,1,0],[1,2,0],[0,0,5]]: eigenvalues 5, 3, 1.
  const std::vector<double> a{2, 1, 0, 1, 2, 0, 0, 0, 5};
  const EigenSym e = eig_sym(a, 3);
  CHECK(e.values[0] == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(e.values[1] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(e.values[2] == doctest::Approx(1.0).epsilon(1e-12));
  // Reconstruction.
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        acc += e.vectors[i * 3 + k] * e.values[k] * e.vectors[j * 3 + k];
      }
      CHECK(acc == doctest::Approx(a[i * 3 + j]).epsilon(1e-10));
    }
  }
}

TEST_CASE("psd_repair") {
  // Indefinite 3x3 correlation-like matrix.
  CorrMatrix r;
  r.p = 3;
  r.values = {1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0};
  CHECK(min_eigenvalue(r) < -0.1);

  const CorrMatrix fixed = psd_repair(r);
  CHECK(min_eigenvalue(fixed) >= -1e-10);
  for (std::size_t i = 0; i < 3; ++i) CHECK(fixed.at(i, i) == 1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(fixed.at(i, j) == fixed.at(j, i));
      CHECK(std::abs(fixed.at(i, j)) <= 1.0 + 1e-12);
    }
  }

  // Idempotence.
  const CorrMatrix again = psd_repair(fixed);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(std::abs(again.values[i] - fixed.values[i]) <= 1e-12);
  }

  // Already-PSD input is returned unchanged; any 2x2 with unit diagonal
  // and |off| <= 1 is PSD.
  CorrMatrix two;
  two.p = 2;
  two.values = {1.0, -0.73, -0.73, 1.0};
  const CorrMatrix same = psd_repair(two);
  CHECK(same.at(0, 1) == -0.73);
}

TEST_CASE("pair evaluation count is p(p-1)/2") {
  // Count through the estimator calls: use a constant-free estimator and
  // count warnings on an all-degenerate matrix instead.
  DataMatrix d(10, 6);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 6; ++j) d(i, j) = 1.0;  // every column constant
  }
  PairwiseOptions opt;
  opt.estimator = EstimatorId::Pearson;
  const CorrMatrix m = pairwise_corr_matrix(d, opt);
  CHECK(m.warnings.size() == 6 * 5 / 2);  // one warning per evaluated pair
}
