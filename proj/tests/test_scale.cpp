#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "signcorr/errors.hpp"
#include "signcorr/rng.hpp"
#include "signcorr/scale.hpp"

using namespace signcorr;

namespace {

// Reference Qn by full pairwise enumeration.
double qn_brute(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> diffs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) diffs.push_back(std::abs(x[i] - x[j]));
  }
  std::sort(diffs.begin(), diffs.end());
  const std::size_t half = n / 2 + 1;
  const std::size_t k = half * (half - 1) / 2;
  return 2.2191444659850757 * diffs[k - 1];
}

std::vector<double> standard_normal_sample(std::size_t n, std::uint64_t seed) {
  RandomStream s(seed);
  std::vector<double> x(n);
  for (double& v : x) v = s.normal();
  return x;
}

}  // namespace

TEST_CASE("mad examples") {
  const std::vector<double> x{1, 2, 3, 4, 100};
  CHECK(mad(x, false).value == 1.0);
  CHECK(mad(x, true).value == doctest::Approx(1.482602218505602).epsilon(1e-12));

  const std::vector<double> flat{3, 3, 3, 3};
  CHECK(mad(flat, false).value == 0.0);

  const auto z = standard_normal_sample(100000, 99);
  CHECK(mad(z, true).value == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("qn examples") {
  const std::vector<double> five{1, 2, 3, 4, 5};
  CHECK(qn(five).value == doctest::Approx(2.2191444659850757).epsilon(1e-12));

  const std::vector<double> tied{0, 0, 0, 1};
  CHECK(qn(tied).value == 0.0);

  const auto z = standard_normal_sample(100000, 123);
  CHECK(qn(z).value == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("qn equals brute-force enumeration") {
  RandomStream s(404);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(s.next_u64() % 40);
    std::vector<double> x(n);
    for (double& v : x) {
      // Mix continuous values and ties.
      v = (s.uniform01() < 0.3) ? std::floor(4.0 * s.uniform01()) : s.normal();
    }
    CHECK(qn(x).value == doctest::Approx(qn_brute(x)).epsilon(1e-13));
  }
}

TEST_CASE("qn and mad affine equivariance") {
  RandomStream s(31);
  std::vector<double> x(200);
  for (double& v : x) v = s.normal() * 2.5 + 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double a = 4.0 * s.uniform01() - 2.0;
    const double b = 10.0 * s.uniform01() - 5.0;
    if (std::abs(a) < 1e-3) continue;
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
    CHECK(qn(y).value == doctest::Approx(std::abs(a) * qn(x).value).epsilon(1e-12));
    CHECK(mad(y, true).value == doctest::Approx(std::abs(a) * mad(x, true).value).epsilon(1e-12));
  }
}

TEST_CASE("tau_scale basics") {
  // Symmetric sample: the weighted location is the symmetry point, so
  // sigma^2 = (1/3)(min(1,9) + 0 + min(1,9)) with sigma_0 = 1.
  const std::vector<double> sym{-1.0, 0.0, 1.0};
  CHECK(tau_scale(sym).value == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-14));

  RandomStream s(7);
  std::vector<double> x(150);
  for (double& v : x) v = s.normal();
  const double base = tau_scale(x).value;
  for (int trial = 0; trial < 10; ++trial) {
    const double a = 3.0 * s.uniform01() + 0.1;
    const double b = 6.0 * s.uniform01() - 3.0;
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
    CHECK(tau_scale(y).value == doctest::Approx(a * base).epsilon(1e-12));
  }

  const std::vector<double> degenerate{1, 1, 1, 1, 9};
  CHECK_THROWS_AS(tau_scale(degenerate), DegeneracyError);
}

TEST_CASE("tau_scale normal calibration constant") {
  // Population value from closed Gaussian integrals; the estimator must
  // land near it on a large normal sample.
  const double k = tau_scale_normal_constant();
  CHECK(k == doctest::Approx(0.9616212311).epsilon(1e-8));
  const auto z = standard_normal_sample(100000, 2718);
  CHECK(tau_scale(z).value == doctest::Approx(k).epsilon(0.02));
}
