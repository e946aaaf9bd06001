#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "signcorr/data.hpp"
#include "signcorr/numerics.hpp"

namespace signcorr {

enum class EstimatorId {
  Pearson,
  SpatialSign,
  SpatialSignTwoStage,
  Quadrant,
  Kendall,
  Spearman,
  GaussianRank,
  GkQn,
  GkTau,
  Tyler,
  RawMcd,
  WeightedMcd,
  SEstimator,
  StahelDonoho,
};

struct CorrEstimate {
  EstimatorId id = EstimatorId::Pearson;
  double value = 0.0;  // in [-1, 1]
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  int n_used = 0;
  std::map<std::string, double> diagnostics;
};

// (a, rho) parametrization of the shape equivalence class: the
// representative with reciprocal diagonals is [[a, rho], [rho, 1/a]].
struct Shape2 {
  double a = 1.0;            // sqrt(v11 / v22) > 0
  double rho = 0.0;          // |rho| < 1
  Mat2 u;                    // eigenvectors of the reconstructed shape
  double lambda_ratio = 1.0; // lambda1 / lambda2 >= 1
};

enum class RobustScaleKind { Mad, Qn };

// (x - center) / ||x - center||, the zero vector when x == center.
std::vector<double> spatial_sign(std::span<const double> x, std::span<const double> center);
Vec2 spatial_sign2(Vec2 x, Vec2 center);

struct SpatialMedianResult {
  std::vector<double> point;
  int iterations = 0;
  double residual = 0.0;  // norm of the (anchor-corrected) average sign
};

// Minimizer of sum_i ||X_i - mu||. Modified Weiszfeld iteration with the
// Vardi-Zhang correction when the iterate lands on a data point; starts
// at the coordinate-wise median. Throws ConvergenceError past max_iter.
SpatialMedianResult spatial_median(const DataMatrix& data, double tol = 1e-10,
                                   int max_iter = 1000);

// Average outer product of spatial signs about `center` (given location)
// or about the spatial median of the data (unknown location). Row-major
// p x p symmetric result.
std::vector<double> sscm(const DataMatrix& data,
                         const std::optional<std::vector<double>>& center = std::nullopt);

SymMat2 sscm2(const DataMatrix& data, const std::optional<Vec2>& center = std::nullopt);

// Shape reconstruction in 2D: eigenvalues of the shape are obtained from
// the SSCM eigenvalues via the inverted delta map (lambda ratio equals
// the squared delta ratio).
Shape2 shape_from_sscm2(const SymMat2& s);

double spatial_sign_corr_from_sscm(const SymMat2& s);

CorrEstimate spatial_sign_corr(const DataMatrix& data,
                               const std::optional<Vec2>& center = std::nullopt);

// Margins are divided by a robust scale first; removes the efficiency
// loss from heteroscedastic margins (a ~ 1 after standardization).
CorrEstimate two_stage_spatial_sign_corr(const DataMatrix& data,
                                         RobustScaleKind scale = RobustScaleKind::Qn);

// Wald interval with plug-in asymptotic variance, clipped to [-1, 1].
// For the two-stage estimator the plug-in uses a = 1.
CorrEstimate sscorr_ci(CorrEstimate estimate, int n, double level, bool two_stage);

}  // namespace signcorr
