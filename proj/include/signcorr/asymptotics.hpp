#pragma once

#include <utility>

#include "signcorr/numerics.hpp"

namespace signcorr {

// Shape parameters of a bivariate elliptical distribution in the
// reciprocal-diagonal parametrization V0 = [[a, rho], [rho, 1/a]].
// kappa is the marginal excess kurtosis; NaN when moments do not exist.
struct EllipticalShapeParams {
  double a = 1.0;
  double rho = 0.0;
  double kappa = 0.0;
};

using AsymptoticCov2 = SymMat2;

// Eigenvalue map of the population SSCM in 2D:
// delta_j = sqrt(lambda_j) / (sqrt(lambda_1) + sqrt(lambda_2)).
std::pair<double, double> delta_from_lambda(double lambda1, double lambda2);

// V0 = [[a, rho], [rho, 1/a]] as a SymMat2.
SymMat2 shape_matrix_v0(double a, double rho);

// Asymptotic covariance of vec(SSCM) for a bivariate elliptical
// distribution with shape eigenvalues (lambda1, lambda2) and eigenvector
// matrix u. The scalar factor has a removable singularity at equal
// eigenvalues where it tends to 1/8.
Mat4 ws_matrix(double lambda1, double lambda2, const Mat2& u);

// (1 - rho^2)^2 + (a + 1/a)/2 * (1 - rho^2)^(3/2)
double asv_spatial_corr(double rho, double a);

// Two-stage variant: asv_spatial_corr at a = 1.
double asv_two_stage(double rho);

// (1 + kappa/3) * (1 - rho^2)^2
double asv_pearson(double rho, double kappa);

// Efficiency relative to Pearson; NaN kappa propagates (no 4th moment).
double are_spatial(double rho, double a, double kappa);

// Asymptotic covariance of (a_hat, rho_hat): the 2x2 matrix G W_S G^T.
// Its [2,2] entry equals asv_spatial_corr(rho, a).
AsymptoticCov2 wv0_matrix(double a, double rho);

// Influence function of the SSCM: x x^T / (x^T x) - S.
SymMat2 if_sscm(Vec2 x, const SymMat2& s);

// Influence function of the spatial sign correlation; depends on x only
// through its direction.
double if_spatial_corr(Vec2 x, double a, double rho);

// Gross-error sensitivity sup_x |IF|. Closed form for a = 1; numeric
// maximization over the direction for general a.
double ges_spatial_corr(double a, double rho);

}  // namespace signcorr
