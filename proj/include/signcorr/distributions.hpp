#pragma once

#include "signcorr/data.hpp"
#include "signcorr/numerics.hpp"
#include "signcorr/rng.hpp"

namespace signcorr {

enum class EllipticalFamily { Normal, StudentT, PowerExp };

struct EllipticalSpec {
  SymMat2 sigma{1.0, 0.0, 1.0};
  EllipticalFamily family = EllipticalFamily::Normal;
  double parameter = 0.0;  // nu for StudentT, alpha for PowerExp
};

// [[var1, rho*sqrt(var1*var2)], [., var2]]
SymMat2 sigma_from_rho(double rho, double var1, double var2);

// Lower-triangular Cholesky factor of a positive definite SymMat2.
Mat2 cholesky2(const SymMat2& sigma);

DataMatrix sample_normal2(const SymMat2& sigma, std::size_t n, const SeedSpec& seed);

// Elliptical t_nu: Cholesky(sigma) * Z / sqrt(W/nu). For nu <= 2 the
// shape parameter, not a covariance, is targeted.
DataMatrix sample_t2(const SymMat2& sigma, double nu, std::size_t n, const SeedSpec& seed);

// Power exponential with density generator g(t) = exp(-t^alpha / 2):
// the squared Mahalanobis radius satisfies T^alpha ~ Gamma(1/alpha, 2),
// so X = mu + T^(1/2) * Cholesky(sigma) * U with U uniform on the circle.
// alpha = 1 is the normal radial law, alpha = 0.5 the elliptical Laplace.
DataMatrix sample_powerexp2(const SymMat2& sigma, double alpha, std::size_t n,
                            const SeedSpec& seed);

// E[R^k] for the power exponential radial part R (test oracle support).
double powerexp_radial_moment(double alpha, int k);

// Skewed construction X = alpha Z1 + Z2, Y = Z1 + alpha Z2 with i.i.d.
// Exp(1) components and alpha = (1 - sqrt(1 - rho^2)) / rho; population
// correlation of (X, Y) is rho.
DataMatrix sample_skewed_exp(double rho, std::size_t n, const SeedSpec& seed);

// Copy with the x-coordinate of observation 0 shifted right by h.
DataMatrix contaminate_shift(const DataMatrix& data, double h);

// Copy with the first m rows replaced by N(0, contam_sigma) draws; the
// replacement rows for fixed seed do not depend on m, so m and m+1
// differ in exactly one row.
DataMatrix contaminate_replace(const DataMatrix& data, std::size_t m,
                               const SymMat2& contam_sigma, const SeedSpec& seed);

}  // namespace signcorr
