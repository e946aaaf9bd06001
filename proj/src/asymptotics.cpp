#include "signcorr/asymptotics.hpp"

#include <cmath>
#include <stdexcept>

namespace signcorr {

namespace {

void require_shape(double a, double rho, const char* who) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw std::domain_error(std::string(who) + ": a must be positive");
  }
  if (!(std::abs(rho) < 1.0)) {
    throw std::domain_error(std::string(who) + ": |rho| must be < 1");
  }
}

}  // namespace

std::pair<double, double> delta_from_lambda(double lambda1, double lambda2) {
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) {
    throw std::domain_error("delta_from_lambda: eigenvalues must be positive");
  }
  const double r1 = std::sqrt(lambda1);
  const double r2 = std::sqrt(lambda2);
  return {r1 / (r1 + r2), r2 / (r1 + r2)};
}

SymMat2 shape_matrix_v0(double a, double rho) {
  require_shape(a, rho, "shape_matrix_v0");
  return {a, rho, 1.0 / a};
}

Mat4 ws_matrix(double lambda1, double lambda2, const Mat2& u) {
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) {
    throw std::domain_error("ws_matrix: eigenvalues must be positive");
  }
  double factor;
  if (std::abs(lambda1 - lambda2) <= 1e-9 * (lambda1 + lambda2)) {
    factor = 0.125;  // limit of the ratio at lambda1 = lambda2
  } else {
    const double d = lambda1 - lambda2;
    factor = (-lambda1 * lambda2 +
              0.5 * std::sqrt(lambda1 * lambda2) * (lambda1 + lambda2)) /
             (d * d);
  }

  Mat4 w0;
  w0(0, 0) = 1.0;  w0(0, 3) = -1.0;
  w0(1, 1) = 1.0;  w0(1, 2) = 1.0;
  w0(2, 1) = 1.0;  w0(2, 2) = 1.0;
  w0(3, 0) = -1.0; w0(3, 3) = 1.0;

  const Mat4 uu = kron2(u, u);
  Mat4 ws = matmul(matmul(uu, w0), transpose(uu));
  for (double& v : ws.a) v *= factor;
  return ws;
}

double asv_spatial_corr(double rho, double a) {
  require_shape(a, rho, "asv_spatial_corr");
  const double t = 1.0 - rho * rho;
  return t * t + 0.5 * (a + 1.0 / a) * t * std::sqrt(t);
}

double asv_two_stage(double rho) { return asv_spatial_corr(rho, 1.0); }

double asv_pearson(double rho, double kappa) {
  if (!(std::abs(rho) < 1.0)) {
    throw std::domain_error("asv_pearson: |rho| must be < 1");
  }
  const double t = 1.0 - rho * rho;
  return (1.0 + kappa / 3.0) * t * t;
}

double are_spatial(double rho, double a, double kappa) {
  require_shape(a, rho, "are_spatial");
  if (std::isnan(kappa)) return kappa;  // fourth moment does not exist
  return (1.0 + kappa / 3.0) /
         (1.0 + 0.5 * (a + 1.0 / a) / std::sqrt(1.0 - rho * rho));
}

AsymptoticCov2 wv0_matrix(double a, double rho) {
  require_shape(a, rho, "wv0_matrix");

  const double q = 4.0 * a * a * rho * rho + (a * a - 1.0) * (a * a - 1.0);
  if (q < 1e-14) {
    // Spherical point (a, rho) = (1, 0): the G entries and 1/q both
    // degenerate but the product has the finite value diag(2, 2).
    return {2.0, 0.0, 2.0};
  }

  const SymMat2 v0 = shape_matrix_v0(a, rho);
  const Eigen2 e = eig_sym2(v0);
  const Mat4 ws = ws_matrix(e.lambda1, e.lambda2, e.u);

  const double s = std::sqrt(1.0 - rho * rho);
  const double w = (a * a + 1.0) * s + 2.0 * a * (1.0 - rho * rho);
  const double pre = w / (s * q);

  // Jacobian block of (s11, s12) -> (a, rho); the g21 entry carries the
  // factor (a^2 - 1) * rho required by the inverse function theorem
  // (it vanishes at rho = 0 together with d rho / d s11).
  const double a2 = a * a;
  const double g11 = (a2 - 1.0) * (a2 - 1.0) * s + 2.0 * a * (a2 + 1.0) * rho * rho;
  const double g12 = (a - 1.0) * (a + 1.0) * rho * (2.0 * a * s - a2 - 1.0);
  const double g21 =
      (a - 1.0) * (a + 1.0) * rho * ((a2 + 1.0) * s - 2.0 * a * (1.0 - rho * rho)) / a;
  const double g22 =
      2.0 * (a2 + 1.0) * rho * rho * s + (a2 - 1.0) * (a2 - 1.0) * (1.0 - rho * rho) / a;

  // G has zero columns for the (s12, s22) duplicates; only the leading
  // 2x2 block of W_S enters.
  const double G[2][2] = {{pre * g11, pre * g12}, {pre * g21, pre * g22}};
  const double M[2][2] = {{ws(0, 0), ws(0, 1)}, {ws(1, 0), ws(1, 1)}};

  AsymptoticCov2 out;
  out.s11 = G[0][0] * (M[0][0] * G[0][0] + M[0][1] * G[0][1]) +
            G[0][1] * (M[1][0] * G[0][0] + M[1][1] * G[0][1]);
  out.s12 = G[0][0] * (M[0][0] * G[1][0] + M[0][1] * G[1][1]) +
            G[0][1] * (M[1][0] * G[1][0] + M[1][1] * G[1][1]);
  out.s22 = G[1][0] * (M[0][0] * G[1][0] + M[0][1] * G[1][1]) +
            G[1][1] * (M[1][0] * G[1][0] + M[1][1] * G[1][1]);
  return out;
}

SymMat2 if_sscm(Vec2 x, const SymMat2& s) {
  const double n2 = x.x * x.x + x.y * x.y;
  if (n2 == 0.0) throw std::domain_error("if_sscm: x must be nonzero");
  return {x.x * x.x / n2 - s.s11, x.x * x.y / n2 - s.s12, x.y * x.y / n2 - s.s22};
}

double if_spatial_corr(Vec2 x, double a, double rho) {
  require_shape(a, rho, "if_spatial_corr");
  const double n2 = x.x * x.x + x.y * x.y;
  if (n2 == 0.0) throw std::domain_error("if_spatial_corr: x must be nonzero");

  const double s = std::sqrt(1.0 - rho * rho);
  const double a2 = a * a;
  const double rho2 = rho * rho;
  const double term1 =
      -((a2 + 1.0) * rho * s + 2.0 * a * rho * (1.0 - rho2)) * (a2 * x.y * x.y + x.x * x.x);
  const double term2 = -((a2 * a2 + 6.0 * a2 + 1.0) * (rho2 - 1.0) +
                         2.0 * a * (a2 + 1.0) * s * (rho2 - 2.0)) *
                       x.x * x.y;
  const double den = (2.0 * a2 * s + a * (a2 + 1.0)) * n2;
  return (term1 + term2) / den;
}

double ges_spatial_corr(double a, double rho) {
  require_shape(a, rho, "ges_spatial_corr");

  if (a == 1.0) {
    const double s = std::sqrt(1.0 - rho * rho);
    const double rho2 = rho * rho;
    const double inner =
        (rho2 - 1.0) * (-rho2 * rho2 + 8.0 * rho2 + 4.0 * s * (rho2 - 2.0) - 8.0);
    return (std::sqrt(inner) + std::abs(rho) * (s - rho2 + 1.0)) / (s + 1.0);
  }

  // |IF| is pi-periodic in the direction; bracket on a grid, then
  // golden-section refine.
  constexpr int grid = 720;
  constexpr double pi = 3.14159265358979323846;
  const auto f = [&](double theta) {
    return std::abs(if_spatial_corr({std::cos(theta), std::sin(theta)}, a, rho));
  };
  int best = 0;
  double best_val = f(0.0);
  for (int k = 1; k < grid; ++k) {
    const double v = f(pi * k / grid);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  double lo = pi * (best - 1) / grid;
  double hi = pi * (best + 1) / grid;
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > 1e-12) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    }
  }
  return std::max(f1, f2);
}

}  // namespace signcorr
