#pragma once

#include <array>
#include <cstddef>
#include <span>

namespace signcorr {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double c, Vec2 v) { return {c * v.x, c * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

// Symmetric 2x2 matrix; only the three free entries are stored.
struct SymMat2 {
  double s11 = 0.0;
  double s12 = 0.0;
  double s22 = 0.0;

  double trace() const { return s11 + s22; }
  double det() const { return s11 * s22 - s12 * s12; }
};

// General (not necessarily symmetric) 2x2 matrix, row major.
struct Mat2 {
  double m[2][2] = {{0.0, 0.0}, {0.0, 0.0}};

  double& operator()(int i, int j) { return m[i][j]; }
  double operator()(int i, int j) const { return m[i][j]; }

  static Mat2 identity() { return {{{1.0, 0.0}, {0.0, 1.0}}}; }
};

Mat2 matmul(const Mat2& a, const Mat2& b);
Vec2 matvec(const Mat2& a, Vec2 v);
SymMat2 congruence(const Mat2& u, double d1, double d2);  // U diag(d1,d2) U^T

// Eigendecomposition of a SymMat2: lambda1 >= lambda2, u orthogonal with
// eigenvectors as columns (first nonzero component of each column positive).
struct Eigen2 {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Mat2 u;
};

struct Mat4 {
  std::array<double, 16> a{};

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(4 * i + j)]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(4 * i + j)]; }
};

Mat4 matmul(const Mat4& x, const Mat4& y);
Mat4 transpose(const Mat4& x);

// Closed-form eigenpair of a symmetric 2x2 matrix. Eigengaps below
// 1e-14 * max(|lambda1|, 1) collapse to equal eigenvalues with U = I.
Eigen2 eig_sym2(const SymMat2& m);

// Kronecker product of two 2x2 matrices, block (i,j) = a_ij * b.
Mat4 kron2(const Mat2& a, const Mat2& b);

double std_normal_cdf(double x);
double std_normal_pdf(double x);

// Inverse standard normal CDF. |Phi(result) - p| <= 1e-12 on (0,1).
double std_normal_quantile(double p);

// Lower regularized incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

double chi2_cdf(double x, int df);

// Exact -2*log1p(-p) for df = 2, numeric inversion otherwise.
double chi2_quantile(double p, int df);

// Neumaier-compensated sum in the given order. The caller fixes the
// order, so results do not depend on thread scheduling.
double stable_sum(std::span<const double> values);

}  // namespace signcorr
