#include "signcorr/numerics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace signcorr {

namespace {

void require_finite2(const SymMat2& m, const char* who) {
  if (!std::isfinite(m.s11) || !std::isfinite(m.s12) || !std::isfinite(m.s22)) {
    throw std::domain_error(std::string(who) + ": non-finite matrix entry");
  }
}

void require_finite2(const Mat2& m, const char* who) {
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (!std::isfinite(m(i, j))) {
        throw std::domain_error(std::string(who) + ": non-finite matrix entry");
      }
    }
  }
}

// Flip an eigenvector so its first nonzero component is positive.
Vec2 canonical_sign(Vec2 v) {
  const double lead = (v.x != 0.0) ? v.x : v.y;
  return (lead < 0.0) ? Vec2{-v.x, -v.y} : v;
}

}  // namespace

Mat2 matmul(const Mat2& a, const Mat2& b) {
  Mat2 c;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      c(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j);
    }
  }
  return c;
}

Vec2 matvec(const Mat2& a, Vec2 v) {
  return {a(0, 0) * v.x + a(0, 1) * v.y, a(1, 0) * v.x + a(1, 1) * v.y};
}

SymMat2 congruence(const Mat2& u, double d1, double d2) {
  SymMat2 s;
  s.s11 = u(0, 0) * u(0, 0) * d1 + u(0, 1) * u(0, 1) * d2;
  s.s12 = u(0, 0) * u(1, 0) * d1 + u(0, 1) * u(1, 1) * d2;
  s.s22 = u(1, 0) * u(1, 0) * d1 + u(1, 1) * u(1, 1) * d2;
  return s;
}

Mat4 matmul(const Mat4& x, const Mat4& y) {
  Mat4 z;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += x(i, k) * y(k, j);
      z(i, j) = acc;
    }
  }
  return z;
}

Mat4 transpose(const Mat4& x) {
  Mat4 z;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) z(i, j) = x(j, i);
  }
  return z;
}

Eigen2 eig_sym2(const SymMat2& m) {
  require_finite2(m, "eig_sym2");

  const double mean = 0.5 * (m.s11 + m.s22);
  const double h = 0.5 * (m.s11 - m.s22);
  const double r = std::hypot(h, m.s12);

  Eigen2 e;
  e.lambda1 = mean + r;
  e.lambda2 = mean - r;

  const double gap = e.lambda1 - e.lambda2;
  if (gap < 1e-14 * std::max(std::abs(e.lambda1), 1.0)) {
    e.lambda1 = e.lambda2 = mean;
    e.u = Mat2::identity();
    return e;
  }

  Vec2 v1;
  if (m.s12 == 0.0) {
    v1 = (m.s11 >= m.s22) ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
  } else {
    // Pick the better-conditioned of the two analytic eigenvector forms.
    const Vec2 cand1{m.s12, e.lambda1 - m.s11};
    const Vec2 cand2{e.lambda1 - m.s22, m.s12};
    Vec2 v = (std::abs(cand1.y) >= std::abs(cand2.x)) ? cand1 : cand2;
    const double norm = std::hypot(v.x, v.y);
    v1 = {v.x / norm, v.y / norm};
  }
  v1 = canonical_sign(v1);
  const Vec2 v2 = canonical_sign({-v1.y, v1.x});

  e.u(0, 0) = v1.x;
  e.u(1, 0) = v1.y;
  e.u(0, 1) = v2.x;
  e.u(1, 1) = v2.y;
  return e;
}

Mat4 kron2(const Mat2& a, const Mat2& b) {
  require_finite2(a, "kron2");
  require_finite2(b, "kron2");
  Mat4 k;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
          k(2 * i + r, 2 * j + c) = a(i, j) * b(r, c);
        }
      }
    }
  }
  return k;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double std_normal_pdf(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("std_normal_quantile: p must lie strictly in (0,1)");
  }

  // Wichura's AS 241 (PPND16) rational approximations.
  const double q = p - 0.5;
  double x;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    x = q *
        (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
              6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
            1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
          1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
            5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
          4.2313330701600911252e+1) * r + 1.0);
  } else {
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
      r -= 1.6;
      x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
    } else {
      r -= 5.0;
      x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
    }
    if (q < 0.0) x = -x;
  }

  // One Newton step against the erfc-based CDF.
  const double pdf = std_normal_pdf(x);
  if (pdf > 0.0) x -= (std_normal_cdf(x) - p) / pdf;
  return x;
}

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0) || !std::isfinite(x)) {
    throw std::domain_error("regularized_gamma_p: need a > 0 and finite x >= 0");
  }
  if (x == 0.0) return 0.0;

  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // Series representation.
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < 1000; ++k) {
      term *= x / (a + k);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }

  // Continued fraction for Q(a, x), modified Lentz.
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double f = d;
  for (int k = 1; k < 1000; ++k) {
    const double an = -k * (k - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  const double q = std::exp(-x + a * std::log(x) - lg) * f;
  return 1.0 - q;
}

double chi2_cdf(double x, int df) {
  if (df < 1) throw std::domain_error("chi2_cdf: df must be >= 1");
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * df, 0.5 * x);
}

double chi2_quantile(double p, int df) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("chi2_quantile: p must lie strictly in (0,1)");
  }
  if (df < 1) throw std::domain_error("chi2_quantile: df must be >= 1");

  if (df == 2) return -2.0 * std::log1p(-p);

  // Wilson-Hilferty start, then safeguarded Newton on the CDF.
  const double z = std_normal_quantile(p);
  const double k = static_cast<double>(df);
  double x = k * std::pow(1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k)), 3.0);
  if (!(x > 0.0)) x = 0.5 * k;

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  const double half = 0.5 * k;
  const double log_norm = half * std::log(2.0) + std::lgamma(half);
  for (int it = 0; it < 200; ++it) {
    const double cdf = chi2_cdf(x, df);
    const double err = cdf - p;
    if (err > 0.0) {
      hi = std::min(hi, x);
    } else {
      lo = std::max(lo, x);
    }
    if (std::abs(err) <= 1e-13) break;
    const double log_pdf = (half - 1.0) * std::log(x) - 0.5 * x - log_norm;
    double step = err / std::exp(log_pdf);
    double next = x - step;
    if (!(next > lo && (next < hi))) {
      next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * x;
    }
    if (next == x) break;
    x = next;
  }
  return x;
}

double stable_sum(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

}  // namespace signcorr
