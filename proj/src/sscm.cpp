#include "signcorr/sscm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "signcorr/asymptotics.hpp"
#include "signcorr/errors.hpp"
#include "signcorr/scale.hpp"

namespace signcorr {

namespace {

double norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

std::vector<double> columnwise_median(const DataMatrix& data) {
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  std::vector<double> med(p);
  std::vector<double> col(n);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = data(i, j);
    const std::size_t mid = n / 2;
    std::nth_element(col.begin(), col.begin() + mid, col.end());
    double m = col[mid];
    if (n % 2 == 0) {
      std::nth_element(col.begin(), col.begin() + (mid - 1), col.begin() + mid);
      m = 0.5 * (m + col[mid - 1]);
    }
    med[j] = m;
  }
  return med;
}

}  // namespace

std::vector<double> spatial_sign(std::span<const double> x, std::span<const double> center) {
  if (x.size() != center.size()) {
    throw std::domain_error("spatial_sign: dimension mismatch");
  }
  std::vector<double> d(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j]) || !std::isfinite(center[j])) {
      throw std::domain_error("spatial_sign: non-finite input");
    }
    d[j] = x[j] - center[j];
  }
  const double r = norm(d);
  if (r == 0.0) return d;  // all zeros already
  for (double& v : d) v /= r;
  return d;
}

Vec2 spatial_sign2(Vec2 x, Vec2 center) {
  const double dx = x.x - center.x;
  const double dy = x.y - center.y;
  const double r = std::hypot(dx, dy);
  if (r == 0.0) return {0.0, 0.0};
  return {dx / r, dy / r};
}

namespace {

struct MedianStats {
  double residual = 0.0;            // max(0, ||sum signs|| - anchors)/n
  double sign_norm = 0.0;           // ||sum of spatial signs||
  std::size_t coincident = 0;       // rows equal to the evaluation point
  double min_dist = 0.0;            // distance to the nearest distinct row
  std::size_t min_index = 0;
  std::vector<double> sign_sum;     // sum of spatial signs
  std::vector<double> weiszfeld;    // Weiszfeld target sum(w x)/sum(w)
  std::vector<double> hessian;      // p x p: sum (I - s s^T)/d
};

MedianStats median_stats(const DataMatrix& data, std::span<const double> mu,
                         bool want_hessian) {
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  MedianStats st;
  st.min_dist = std::numeric_limits<double>::infinity();
  st.sign_sum.assign(p, 0.0);
  st.weiszfeld.assign(p, 0.0);
  if (want_hessian) st.hessian.assign(p * p, 0.0);
  std::vector<double> diff(p);
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = data.row(i);
    double dist2 = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      diff[j] = xi[j] - mu[j];
      dist2 += diff[j] * diff[j];
    }
    const double dist = std::sqrt(dist2);
    if (dist == 0.0) {
      ++st.coincident;
      continue;
    }
    if (dist < st.min_dist) {
      st.min_dist = dist;
      st.min_index = i;
    }
    const double w = 1.0 / dist;
    weight_sum += w;
    for (std::size_t j = 0; j < p; ++j) {
      st.weiszfeld[j] += w * xi[j];
      st.sign_sum[j] += diff[j] * w;
    }
    if (want_hessian) {
      for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a; b < p; ++b) {
          const double sab = diff[a] * diff[b] / dist2;
          st.hessian[a * p + b] += (((a == b) ? 1.0 : 0.0) - sab) * w;
        }
      }
    }
  }
  if (weight_sum > 0.0) {
    for (double& v : st.weiszfeld) v /= weight_sum;
  } else {
    st.weiszfeld.assign(mu.begin(), mu.end());
  }
  if (want_hessian) {
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < a; ++b) st.hessian[a * p + b] = st.hessian[b * p + a];
    }
  }
  st.sign_norm = norm(st.sign_sum);
  st.residual = std::max(0.0, st.sign_norm - static_cast<double>(st.coincident)) /
                static_cast<double>(n);
  return st;
}

// In-place Cholesky solve of A x = b for a small SPD matrix; false when
// the factorization breaks down.
bool cholesky_solve(std::vector<double> a, std::size_t p, std::vector<double>& b) {
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      double acc = a[i * p + j];
      for (std::size_t k = 0; k < i; ++k) acc -= a[i * p + k] * a[j * p + k];
      if (i == j) {
        if (!(acc > 0.0)) return false;
        a[i * p + i] = std::sqrt(acc);
      } else {
        a[j * p + i] = acc / a[i * p + i];
      }
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= a[i * p + k] * b[k];
    b[i] /= a[i * p + i];
  }
  for (std::size_t ii = p; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < p; ++k) b[ii] -= a[k * p + ii] * b[k];
    b[ii] /= a[ii * p + ii];
  }
  return true;
}

}  // namespace

SpatialMedianResult spatial_median(const DataMatrix& data, double tol, int max_iter) {
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  if (n == 0) throw std::domain_error("spatial_median: empty sample");
  data.require_finite("spatial_median");

  std::vector<double> mu = columnwise_median(data);
  if (n == 1) return {mu, 0, 0.0};

  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : data.row(i)) scale = std::max(scale, std::abs(v));
  }

  // Weiszfeld with the Vardi-Zhang anchor correction, plus a safeguarded
  // Newton polish once the iterate is near the minimizer; Weiszfeld alone
  // has a linear rate that cannot reliably reach tight tolerances on
  // strongly elongated clouds.
  std::vector<double> candidate(p);
  double residual = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    const MedianStats st = median_stats(data, mu, true);
    residual = st.residual;
    if (residual <= tol) return {mu, iter, residual};

    // The minimizer may sit exactly on a data point, where the 1/d
    // weights blow up and the iteration creeps. Test the anchor
    // optimality condition at the nearest observation directly.
    if (std::isfinite(st.min_dist) && st.min_dist <= 1e-6 * scale) {
      const auto anchor = data.row(st.min_index);
      candidate.assign(anchor.begin(), anchor.end());
      const MedianStats at = median_stats(data, candidate, false);
      if (at.residual <= tol) return {candidate, iter + 1, at.residual};
    }

    bool stepped = false;
    if (st.coincident == 0 && !st.hessian.empty()) {
      std::vector<double> step = st.sign_sum;  // solve H step = sum signs
      if (cholesky_solve(st.hessian, p, step)) {
        for (std::size_t j = 0; j < p; ++j) candidate[j] = mu[j] + step[j];
        const MedianStats at = median_stats(data, candidate, false);
        if (at.residual < 0.9 * residual) {
          mu = candidate;
          stepped = true;
        }
      }
    }
    if (!stepped) {
      if (st.coincident == 0) {
        mu = st.weiszfeld;
      } else {
        // Vardi-Zhang: shrink the Weiszfeld target toward the anchor.
        const double gamma =
            std::min(1.0, static_cast<double>(st.coincident) / st.sign_norm);
        for (std::size_t j = 0; j < p; ++j) {
          mu[j] = (1.0 - gamma) * st.weiszfeld[j] + gamma * mu[j];
        }
      }
    }
  }
  throw ConvergenceError("spatial_median: no convergence within iteration budget", mu,
                         residual, max_iter);
}

std::vector<double> sscm(const DataMatrix& data,
                         const std::optional<std::vector<double>>& center) {
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  if (n < 2) throw std::domain_error("sscm: need at least two observations");

  std::vector<double> delta;
  if (center) {
    if (center->size() != p) throw std::domain_error("sscm: center dimension mismatch");
    delta = *center;
  } else {
    delta = spatial_median(data).point;
  }

  std::vector<double> s(p * p, 0.0);
  std::vector<double> sign(p);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = data.row(i);
    double dist2 = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      sign[j] = xi[j] - delta[j];
      dist2 += sign[j] * sign[j];
    }
    if (dist2 == 0.0) continue;  // s(0) = 0 contributes nothing
    const double inv = 1.0 / dist2;
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = a; b < p; ++b) s[a * p + b] += sign[a] * sign[b] * inv;
    }
  }
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a; b < p; ++b) {
      s[a * p + b] *= scale;
      s[b * p + a] = s[a * p + b];
    }
  }
  return s;
}

SymMat2 sscm2(const DataMatrix& data, const std::optional<Vec2>& center) {
  if (data.cols() != 2) throw std::domain_error("sscm2: expected two columns");
  std::optional<std::vector<double>> c;
  if (center) c = std::vector<double>{center->x, center->y};
  const auto s = sscm(data, c);
  return {s[0], s[1], s[3]};
}

Shape2 shape_from_sscm2(const SymMat2& s) {
  if (!(s.trace() > 0.0)) {
    throw std::domain_error("shape_from_sscm2: SSCM trace must be positive");
  }
  const Eigen2 e = eig_sym2(s);
  if (!(e.lambda2 > 0.0)) {
    throw DegeneracyError("shape_from_sscm2: degenerate SSCM (all signs collinear)");
  }

  const double lam1 = e.lambda1 / e.lambda2;
  const double lam2 = e.lambda2 / e.lambda1;
  const SymMat2 v = congruence(e.u, lam1, lam2);

  Shape2 shape;
  shape.a = std::sqrt(v.s11 / v.s22);
  shape.rho = v.s12 / std::sqrt(v.s11 * v.s22);
  shape.u = e.u;
  shape.lambda_ratio = lam1 / lam2;
  return shape;
}

double spatial_sign_corr_from_sscm(const SymMat2& s) {
  const double h = s.s11 - 0.5;
  const double s12 = s.s12;
  const double rad = std::hypot(h, s12);
  const double d = 0.5 + rad;
  if (d >= 1.0 - 1e-12) {
    throw DegeneracyError("spatial_sign_corr: degenerate SSCM (collinear signs)");
  }
  // Spherical SSCM carries no correlation evidence; the limit along
  // s12 -> 0 is 0 for any fixed s11.
  if (s12 == 0.0) return 0.0;

  const double c = (2.0 * d - 1.0) / (d * (1.0 - d));
  // b = rad - h without cancellation when h > 0.
  const double b = (h >= 0.0) ? (s12 * s12) / (rad + h) : rad - h;
  const double num = c * s12 * b;
  const double t1 = s12 * s12 + b * b;
  const double t2 = s12 * c * b;
  const double den = std::sqrt(t1 * t1 + t2 * t2);
  if (den == 0.0) return 0.0;
  return std::clamp(num / den, -1.0, 1.0);
}

CorrEstimate spatial_sign_corr(const DataMatrix& data, const std::optional<Vec2>& center) {
  if (data.cols() != 2) throw std::domain_error("spatial_sign_corr: expected two columns");
  if (data.rows() < 2) throw std::domain_error("spatial_sign_corr: need n >= 2");

  CorrEstimate est;
  est.id = EstimatorId::SpatialSign;
  est.n_used = static_cast<int>(data.rows());

  SymMat2 s;
  if (center) {
    s = sscm2(data, center);
  } else {
    const auto med = spatial_median(data);
    s = sscm2(data, Vec2{med.point[0], med.point[1]});
    est.diagnostics["median_iterations"] = med.iterations;
  }

  est.value = spatial_sign_corr_from_sscm(s);
  est.diagnostics["s11"] = s.s11;
  est.diagnostics["s12"] = s.s12;
  const double rad = std::hypot(s.s11 - 0.5, s.s12);
  if (0.5 - rad > 0.0) {
    est.diagnostics["a_hat"] = shape_from_sscm2(s).a;
  }
  return est;
}

CorrEstimate two_stage_spatial_sign_corr(const DataMatrix& data, RobustScaleKind scale) {
  if (data.cols() != 2) throw std::domain_error("two_stage_spatial_sign_corr: expected two columns");
  const std::size_t n = data.rows();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = data(i, 0);
    ys[i] = data(i, 1);
  }
  const double sx = (scale == RobustScaleKind::Qn) ? qn(xs).value : mad(xs, true).value;
  const double sy = (scale == RobustScaleKind::Qn) ? qn(ys).value : mad(ys, true).value;
  if (!(sx > 0.0) || !(sy > 0.0)) {
    throw DegeneracyError("two_stage_spatial_sign_corr: zero robust scale in a margin");
  }

  DataMatrix standardized(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    standardized(i, 0) = xs[i] / sx;
    standardized(i, 1) = ys[i] / sy;
  }
  CorrEstimate est = spatial_sign_corr(standardized);
  est.id = EstimatorId::SpatialSignTwoStage;
  est.diagnostics["scale_x"] = sx;
  est.diagnostics["scale_y"] = sy;
  return est;
}

CorrEstimate sscorr_ci(CorrEstimate estimate, int n, double level, bool two_stage) {
  if (!(level > 0.0 && level < 1.0)) {
    throw std::domain_error("sscorr_ci: level must lie strictly in (0,1)");
  }
  if (n < 2) throw std::domain_error("sscorr_ci: need n >= 2");

  double a_hat = 1.0;
  if (!two_stage) {
    const auto it = estimate.diagnostics.find("a_hat");
    if (it != estimate.diagnostics.end()) a_hat = it->second;
  }
  const double asv = asv_spatial_corr(std::clamp(estimate.value, -0.999999, 0.999999), a_hat);
  const double z = std_normal_quantile(0.5 * (1.0 + level));
  const double half = z * std::sqrt(asv / static_cast<double>(n));
  estimate.ci_low = std::max(-1.0, estimate.value - half);
  estimate.ci_high = std::min(1.0, estimate.value + half);
  estimate.diagnostics["asv_plugin"] = asv;
  return estimate;
}

}  // namespace signcorr
