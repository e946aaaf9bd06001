#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "signcorr/asymptotics.hpp"
#include "signcorr/distributions.hpp"
#include "signcorr/errors.hpp"
#include "signcorr/sscm.hpp"

using namespace signcorr;

namespace {

// Population SSCM of the shape V0(a, rho) through the eigenvalue map.
SymMat2 population_sscm(double a, double rho) {
  const Eigen2 e = eig_sym2(shape_matrix_v0(a, rho));
  const auto [d1, d2] = delta_from_lambda(e.lambda1, e.lambda2);
  return congruence(e.u, d1, d2);
}

}  // namespace

TEST_CASE("spatial_sign examples") {
  const std::vector<double> x{3.0, 4.0};
  const std::vector<double> zero{0.0, 0.0};
  const auto s = spatial_sign(x, zero);
  CHECK(s[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(s[1] == doctest::Approx(0.8).epsilon(1e-15));

  const auto at_center = spatial_sign(x, x);
  CHECK(at_center[0] == 0.0);
  CHECK(at_center[1] == 0.0);

  const Vec2 left = spatial_sign2({-2.0, 0.0}, {0.0, 0.0});
  CHECK(left.x == -1.0);
  CHECK(left.y == 0.0);

  CHECK_THROWS_AS(spatial_sign(x, std::vector<double>{0.0}), std::domain_error);
}

TEST_CASE("spatial_median symmetric configurations") {
  const auto cross = DataMatrix::from_pairs({{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
  const auto m1 = spatial_median(cross);
  CHECK(std::abs(m1.point[0]) <= 1e-9);
  CHECK(std::abs(m1.point[1]) <= 1e-9);

  // Equilateral triangle: the objective is minimized at the centroid.
  const double h = std::sqrt(3.0) / 2.0;
  const auto triangle = DataMatrix::from_pairs({{0, 0}, {1, 0}, {0.5, h}});
  const auto m2 = spatial_median(triangle);
  CHECK(m2.point[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(m2.point[1] == doctest::Approx(h / 3.0).epsilon(1e-6));

  // Multiplicity 3 anchor beats the distant point: mu on the segment
  // scores 3||mu|| + |10 - mu_x|, minimized at the origin.
  const auto anchored = DataMatrix::from_pairs({{0, 0}, {0, 0}, {0, 0}, {10, 0}});
  const auto m3 = spatial_median(anchored);
  CHECK(std::abs(m3.point[0]) <= 1e-9);
  CHECK(std::abs(m3.point[1]) <= 1e-9);
}

TEST_CASE("spatial_median centers the signs") {
  const SeedSpec seed(31);
  const auto data = sample_normal2(sigma_from_rho(0.4, 1.0, 2.0), 500, seed);
  const auto med = spatial_median(data);
  Vec2 avg{0.0, 0.0};
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const Vec2 s = spatial_sign2(data.row2(i), {med.point[0], med.point[1]});
    avg.x += s.x;
    avg.y += s.y;
  }
  avg.x /= static_cast<double>(data.rows());
  avg.y /= static_cast<double>(data.rows());
  CHECK(std::hypot(avg.x, avg.y) <= 1e-10 + 1e-12);
}

TEST_CASE("sscm examples") {
  const std::optional<Vec2> origin = Vec2{0.0, 0.0};
  const auto two = sscm2(DataMatrix::from_pairs({{1, 0}, {-1, 0}}), origin);
  CHECK(two.s11 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(two.s12 == 0.0);
  CHECK(two.s22 == 0.0);

  const auto cross = sscm2(DataMatrix::from_pairs({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}), origin);
  CHECK(cross.s11 == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(cross.s12 == 0.0);
  CHECK(cross.s22 == doctest::Approx(0.5).epsilon(1e-15));

  const auto diag = sscm2(DataMatrix::from_pairs({{1, 1}, {-1, -1}}), origin);
  CHECK(diag.s11 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(diag.s12 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(diag.s22 == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("sscm in three dimensions") {
  // Signs of +-e_i average to I/3; the spatial median of the symmetric
  // 6-point configuration is the origin.
  const auto data = DataMatrix::from_rows({{1, 0, 0},
                                           {-1, 0, 0},
                                           {0, 2, 0},
                                           {0, -2, 0},
                                           {0, 0, 0.5},
                                           {0, 0, -0.5}});
  const auto med = spatial_median(data);
  for (double v : med.point) CHECK(std::abs(v) <= 1e-9);
  const auto s = sscm(data);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(s[i * 3 + j] == doctest::Approx(i == j ? 1.0 / 3.0 : 0.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("sscm trace counts observations distinct from the center") {
  const std::optional<Vec2> origin = Vec2{0.0, 0.0};
  const auto with_zero = sscm2(DataMatrix::from_pairs({{0, 0}, {1, 0}, {0, 2}, {3, 3}}), origin);
  CHECK(with_zero.trace() == doctest::Approx(3.0 / 4.0).epsilon(1e-15));

  const SeedSpec seed(8);
  const auto data = sample_normal2(sigma_from_rho(0.3, 1.0, 1.0), 200, seed);
  const auto s = sscm2(data);
  CHECK(s.trace() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sscm orthogonal equivariance") {
  const SeedSpec seed(77);
  const auto data = sample_normal2(sigma_from_rho(0.6, 2.0, 0.5), 300, seed);
  const double phi = 0.71;
  Mat2 q;
  q(0, 0) = std::cos(phi);
  q(0, 1) = -std::sin(phi);
  q(1, 0) = std::sin(phi);
  q(1, 1) = std::cos(phi);

  DataMatrix rotated(data.rows(), 2);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const Vec2 r = matvec(q, data.row2(i));
    rotated(i, 0) = r.x;
    rotated(i, 1) = r.y;
  }
  const Vec2 center{0.3, -0.2};
  const auto s = sscm2(data, center);
  const auto sr = sscm2(rotated, matvec(q, center));

  // Q S Q^T
  const double t11 = q(0, 0) * (s.s11 * q(0, 0) + s.s12 * q(0, 1)) +
                     q(0, 1) * (s.s12 * q(0, 0) + s.s22 * q(0, 1));
  const double t12 = q(0, 0) * (s.s11 * q(1, 0) + s.s12 * q(1, 1)) +
                     q(0, 1) * (s.s12 * q(1, 0) + s.s22 * q(1, 1));
  const double t22 = q(1, 0) * (s.s11 * q(1, 0) + s.s12 * q(1, 1)) +
                     q(1, 1) * (s.s12 * q(1, 0) + s.s22 * q(1, 1));
  CHECK(sr.s11 == doctest::Approx(t11).epsilon(1e-12));
  CHECK(sr.s12 == doctest::Approx(t12).epsilon(1e-12));
  CHECK(sr.s22 == doctest::Approx(t22).epsilon(1e-12));
}

TEST_CASE("sscm boundedness under single-point replacement") {
  const SeedSpec seed(5);
  const auto data = sample_normal2(sigma_from_rho(0.0, 1.0, 1.0), 50, seed);
  const std::optional<Vec2> origin = Vec2{0.0, 0.0};
  const auto base = sscm2(data, origin);
  DataMatrix bad = data;
  bad(7, 0) = 1e9;
  bad(7, 1) = -3e8;
  const auto moved = sscm2(bad, origin);
  const double bound = 2.0 / static_cast<double>(data.rows());
  CHECK(std::abs(moved.s11 - base.s11) <= bound);
  CHECK(std::abs(moved.s12 - base.s12) <= bound);
  CHECK(std::abs(moved.s22 - base.s22) <= bound);
}

TEST_CASE("shape_from_sscm2 examples") {
  const Shape2 s1 = shape_from_sscm2({0.5, 1.0 / 6.0, 0.5});
  CHECK(s1.a == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s1.rho == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(s1.lambda_ratio == doctest::Approx(4.0).epsilon(1e-12));

  const Shape2 s2 = shape_from_sscm2({0.5, 0.0, 0.5});
  CHECK(s2.a == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s2.rho == 0.0);

  const Shape2 s3 = shape_from_sscm2({0.75, 0.0, 0.25});
  CHECK(s3.rho == 0.0);
  CHECK(s3.lambda_ratio == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(s3.a == doctest::Approx(3.0).epsilon(1e-12));

  CHECK_THROWS_AS(shape_from_sscm2({1.0, 0.0, 0.0}), DegeneracyError);
}

TEST_CASE("spatial_sign_corr closed form on fixed SSCMs") {
  CHECK(spatial_sign_corr_from_sscm({0.5, 1.0 / 6.0, 0.5}) ==
        doctest::Approx(0.6).epsilon(1e-12));
  CHECK(spatial_sign_corr_from_sscm({0.5, 0.0, 0.5}) == 0.0);
  CHECK(spatial_sign_corr_from_sscm({0.75, 0.0, 0.25}) == 0.0);
  CHECK_THROWS_AS(spatial_sign_corr_from_sscm({1.0, 0.0, 0.0}), DegeneracyError);
}

TEST_CASE("population round trip over the (a, rho) grid") {
  double worst_rho = 0.0;
  double worst_a = 0.0;
  for (double a : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    for (int r = -9; r <= 9; ++r) {
      const double rho = 0.1 * r;
      const SymMat2 s = population_sscm(a, rho);
      worst_rho = std::max(worst_rho, std::abs(spatial_sign_corr_from_sscm(s) - rho));
      const Shape2 shape = shape_from_sscm2(s);
      worst_a = std::max(worst_a, std::abs(shape.a - a));
    }
  }
  CHECK(worst_rho <= 1e-12);
  CHECK(worst_a <= 1e-12);
}

TEST_CASE("spatial_sign_corr invariances") {
  const SeedSpec seed(11);
  const auto data = sample_normal2(sigma_from_rho(0.5, 1.0, 1.0), 150, seed);
  const double base = spatial_sign_corr(data).value;

  DataMatrix scaled(data.rows(), 2);
  DataMatrix flipped(data.rows(), 2);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    scaled(i, 0) = 3.7 * data(i, 0);
    scaled(i, 1) = 3.7 * data(i, 1);
    flipped(i, 0) = data(i, 0);
    flipped(i, 1) = -data(i, 1);
  }
  CHECK(spatial_sign_corr(scaled).value == doctest::Approx(base).epsilon(1e-12));
  CHECK(spatial_sign_corr(flipped).value == doctest::Approx(-base).epsilon(1e-12));
}

TEST_CASE("spatial_sign_corr degenerate inputs") {
  // Collinear data: all signs on one line.
  const auto collinear = DataMatrix::from_pairs({{1, 1}, {2, 2}, {3, 3}, {-1, -1}});
  CHECK_THROWS_AS(spatial_sign_corr(collinear, Vec2{0.0, 0.0}), DegeneracyError);
}

TEST_CASE("two_stage equals raw when margins share a scale") {
  const SeedSpec seed(13);
  const auto data = sample_normal2(sigma_from_rho(0.4, 1.0, 1.0), 120, seed);
  // Scaling both margins by the same constant leaves the signs unchanged.
  const double raw = spatial_sign_corr(data).value;
  const auto two_stage = two_stage_spatial_sign_corr(data, RobustScaleKind::Qn);
  const double sx = two_stage.diagnostics.at("scale_x");
  const double sy = two_stage.diagnostics.at("scale_y");
  DataMatrix rescaled(data.rows(), 2);
  const double common = 0.5 * (sx + sy);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    rescaled(i, 0) = data(i, 0) / common;
    rescaled(i, 1) = data(i, 1) / common;
  }
  CHECK(spatial_sign_corr(rescaled).value == doctest::Approx(raw).epsilon(1e-8));
  // And a sanity bound: equal population margins keep the two estimates close.
  CHECK(std::abs(two_stage.value - raw) <= 0.1);
}

TEST_CASE("two_stage straightens steep margins") {
  SeedSpec seed(17);
  RandomStream noise = seed.derive(99).stream();
  DataMatrix data(1000, 2);
  for (std::size_t i = 0; i < 1000; ++i) {
    const double x = noise.normal();
    data(i, 0) = x;
    data(i, 1) = 10.0 * x + 0.01 * noise.normal();
  }
  const auto raw = spatial_sign_corr(data);
  const auto ts = two_stage_spatial_sign_corr(data);
  CHECK(raw.value > 0.97);
  CHECK(ts.value > 0.97);
  CHECK(ts.diagnostics.at("a_hat") == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("two_stage variance matches the a=1 asymptotics") {
  // Heteroscedastic margins: sigma = (1, 10). Raw ASV: a = 0.1.
  const int reps = 300;
  const std::size_t n = 10000;
  std::vector<double> raw_vals, ts_vals;
  for (int r = 0; r < reps; ++r) {
    const SeedSpec seed = SeedSpec(4242).derive(r);
    const auto data = sample_normal2(sigma_from_rho(0.5, 1.0, 100.0), n, seed);
    raw_vals.push_back(spatial_sign_corr(data).value);
    ts_vals.push_back(two_stage_spatial_sign_corr(data).value);
  }
  const auto n_var = [&](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return static_cast<double>(n) * acc / (v.size() - 1.0);
  };
  // Relative MC error of a variance over 300 reps is about sqrt(2/300) = 8%.
  CHECK(n_var(ts_vals) == doctest::Approx(asv_two_stage(0.5)).epsilon(0.30));
  CHECK(n_var(raw_vals) == doctest::Approx(asv_spatial_corr(0.5, 0.1)).epsilon(0.30));
}

TEST_CASE("two_stage MAD variant") {
  const SeedSpec seed(23);
  const auto data = sample_normal2(sigma_from_rho(0.5, 1.0, 25.0), 2000, seed);
  const auto via_mad = two_stage_spatial_sign_corr(data, RobustScaleKind::Mad);
  const auto via_qn = two_stage_spatial_sign_corr(data, RobustScaleKind::Qn);
  CHECK(via_mad.value == doctest::Approx(via_qn.value).epsilon(0.05));
  CHECK(via_mad.value == doctest::Approx(0.5).epsilon(0.15));
  CHECK(via_mad.diagnostics.at("scale_y") > 3.0 * via_mad.diagnostics.at("scale_x"));
}

TEST_CASE("sscm rejects a center of the wrong dimension") {
  const auto data = DataMatrix::from_pairs({{1, 0}, {0, 1}, {-1, 0}});
  CHECK_THROWS_AS(sscm(data, std::vector<double>{0.0}), std::domain_error);
}

TEST_CASE("sscorr_ci examples") {
  CorrEstimate est;
  est.id = EstimatorId::SpatialSign;
  est.value = 0.0;
  est.diagnostics["a_hat"] = 1.0;
  const auto ci = sscorr_ci(est, 100, 0.95, false);
  CHECK(*ci.ci_high == doctest::Approx(0.2771808).epsilon(1e-5));
  CHECK(*ci.ci_low == doctest::Approx(-0.2771808).epsilon(1e-5));

  est.value = 0.99;
  const auto clipped = sscorr_ci(est, 10, 0.95, false);
  CHECK(*clipped.ci_high == 1.0);

  est.value = 0.5;
  const auto mid = sscorr_ci(est, 100, 0.95, true);
  const double half = 1.959963984540054 * std::sqrt(asv_two_stage(0.5) / 100.0);
  CHECK(*mid.ci_high == doctest::Approx(0.5 + half).epsilon(1e-10));
  CHECK(half == doctest::Approx(0.215776).epsilon(1e-4));
}
