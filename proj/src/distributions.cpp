#include "signcorr/distributions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace signcorr {

SymMat2 sigma_from_rho(double rho, double var1, double var2) {
  if (!(std::abs(rho) < 1.0)) throw std::domain_error("sigma_from_rho: |rho| must be < 1");
  if (!(var1 > 0.0) || !(var2 > 0.0)) {
    throw std::domain_error("sigma_from_rho: variances must be positive");
  }
  return {var1, rho * std::sqrt(var1 * var2), var2};
}

Mat2 cholesky2(const SymMat2& sigma) {
  if (!(sigma.s11 > 0.0) || !(sigma.det() > 0.0)) {
    throw std::domain_error("cholesky2: matrix not positive definite");
  }
  Mat2 l;
  l(0, 0) = std::sqrt(sigma.s11);
  l(1, 0) = sigma.s12 / l(0, 0);
  l(1, 1) = std::sqrt(sigma.s22 - l(1, 0) * l(1, 0));
  return l;
}

DataMatrix sample_normal2(const SymMat2& sigma, std::size_t n, const SeedSpec& seed) {
  const Mat2 l = cholesky2(sigma);
  RandomStream stream = seed.stream();
  DataMatrix data(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = stream.normal();
    const double z2 = stream.normal();
    data(i, 0) = l(0, 0) * z1;
    data(i, 1) = l(1, 0) * z1 + l(1, 1) * z2;
  }
  return data;
}

DataMatrix sample_t2(const SymMat2& sigma, double nu, std::size_t n, const SeedSpec& seed) {
  if (!(nu > 0.0)) throw std::domain_error("sample_t2: nu must be positive");
  const Mat2 l = cholesky2(sigma);
  RandomStream stream = seed.stream();
  DataMatrix data(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = stream.normal();
    const double z2 = stream.normal();
    const double w = stream.gamma(0.5 * nu, 2.0);  // chi-square(nu)
    const double scale = 1.0 / std::sqrt(w / nu);
    data(i, 0) = scale * (l(0, 0) * z1);
    data(i, 1) = scale * (l(1, 0) * z1 + l(1, 1) * z2);
  }
  return data;
}

DataMatrix sample_powerexp2(const SymMat2& sigma, double alpha, std::size_t n,
                            const SeedSpec& seed) {
  if (!(alpha > 0.0)) throw std::domain_error("sample_powerexp2: alpha must be positive");
  const Mat2 l = cholesky2(sigma);
  RandomStream stream = seed.stream();
  DataMatrix data(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = stream.gamma(1.0 / alpha, 2.0);  // T^alpha
    const double r = std::pow(g, 0.5 / alpha);
    const double theta = 2.0 * std::numbers::pi * stream.uniform01();
    const double u1 = r * std::cos(theta);
    const double u2 = r * std::sin(theta);
    data(i, 0) = l(0, 0) * u1;
    data(i, 1) = l(1, 0) * u1 + l(1, 1) * u2;
  }
  return data;
}

double powerexp_radial_moment(double alpha, int k) {
  // E R^k = 2^(k/(2 alpha)) Gamma(1/alpha + k/(2 alpha)) / Gamma(1/alpha)
  const double e = static_cast<double>(k) / (2.0 * alpha);
  return std::pow(2.0, e) *
         std::exp(std::lgamma(1.0 / alpha + e) - std::lgamma(1.0 / alpha));
}

DataMatrix sample_skewed_exp(double rho, std::size_t n, const SeedSpec& seed) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::domain_error("sample_skewed_exp: rho must lie in [0, 1)");
  }
  const double alpha = (rho == 0.0) ? 0.0 : (1.0 - std::sqrt(1.0 - rho * rho)) / rho;
  RandomStream stream = seed.stream();
  DataMatrix data(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = stream.exponential();
    const double z2 = stream.exponential();
    data(i, 0) = alpha * z1 + z2;
    data(i, 1) = z1 + alpha * z2;
  }
  return data;
}

DataMatrix contaminate_shift(const DataMatrix& data, double h) {
  if (data.rows() == 0) throw std::domain_error("contaminate_shift: empty data");
  DataMatrix out = data;
  out(0, 0) += h;
  return out;
}

DataMatrix contaminate_replace(const DataMatrix& data, std::size_t m,
                               const SymMat2& contam_sigma, const SeedSpec& seed) {
  if (m > data.rows()) throw std::domain_error("contaminate_replace: m exceeds n");
  const Mat2 l = cholesky2(contam_sigma);
  DataMatrix out = data;
  // One substream per row keeps rows m+1..n identical between calls
  // with different m.
  for (std::size_t i = 0; i < m; ++i) {
    RandomStream stream = seed.derive(i).stream();
    const double z1 = stream.normal();
    const double z2 = stream.normal();
    out(i, 0) = l(0, 0) * z1;
    out(i, 1) = l(1, 0) * z1 + l(1, 1) * z2;
  }
  return out;
}

}  // namespace signcorr
