#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "signcorr/data.hpp"
#include "signcorr/rng.hpp"
#include "signcorr/scale.hpp"
#include "signcorr/sscm.hpp"

namespace signcorr {

enum class ScatterMethod { Tyler, RawMcd, WeightedMcd, StahelDonoho, SEstimator };

struct ScatterEstimate {
  Vec2 location;
  SymMat2 cov;
  ScatterMethod method = ScatterMethod::Tyler;
  int iterations = 0;
};

struct ScatterResult {
  ScatterEstimate scatter;
  CorrEstimate corr;
};

CorrEstimate pearson(const DataMatrix& data);

// Sample correlation of the normal scores Phi^{-1}(rank / (n+1)),
// normalized by c_n = sum_i Phi^{-1}(i/(n+1))^2. Ties get midranks.
CorrEstimate gaussian_rank_corr(const DataMatrix& data);

// Rank correlation; `consistent` maps through 2 sin(pi * r / 6).
CorrEstimate spearman_corr(const DataMatrix& data, bool consistent = true);

// Pair-sign correlation; merge-sort inversion counting on tie-free data,
// O(n^2) sign enumeration otherwise. `consistent` maps through
// sin(pi * tau / 2).
CorrEstimate kendall_corr(const DataMatrix& data, bool consistent = true);

// Sign agreement about the coordinate-wise medians; `consistent` maps
// through sin(pi * q / 2).
CorrEstimate quadrant_corr(const DataMatrix& data, bool consistent = true);

// Gnanadesikan-Kettenring: robust variances of the standardized sum and
// difference. Any common consistency factor of the scale cancels.
CorrEstimate gk_corr(const DataMatrix& data, ScaleMethod scale);

// M-estimator of shape: fixed point of the sign-based estimating
// equation, trace normalized to 2. Center defaults to the spatial median.
ScatterResult tyler_shape(const DataMatrix& data, std::optional<Vec2> center = std::nullopt,
                          double tol = 1e-10, int max_iter = 500);

struct McdOptions {
  double alpha = 0.5;  // trimming fraction; subset size h = floor((1-alpha)*n)
  bool reweight = true;
  int n_starts = 500;
  int n_keep = 10;  // candidates carried to full C-step convergence
};

struct McdDiagnostics {
  // Determinant sequence per converged candidate, for monotonicity checks.
  std::vector<std::vector<double>> det_sequences;
  // Converged candidate estimates (location, unscaled subset covariance).
  std::vector<std::pair<Vec2, SymMat2>> candidates;
};

// FAST-MCD style subset search with concentration steps. Raw covariance
// carries the chi-square consistency factor; the reweighted estimate uses
// the 0.975 cutoff with its own factor.
ScatterResult mcd(const DataMatrix& data, const McdOptions& options, const SeedSpec& seed,
                  McdDiagnostics* diagnostics = nullptr);

// Projection-outlyingness weighted mean and covariance. Exhaustive pair
// directions while n(n-1)/2 <= n_dirs, random pairs otherwise.
ScatterResult stahel_donoho(const DataMatrix& data, int n_dirs, const SeedSpec& seed);

struct BiweightTuning {
  double c = 0.0;
  double b = 0.0;
};

// Tukey-biweight tuning for the bivariate S-estimator: b = E w_c(||Z||)
// under the standard normal and r c^2 / 6 = b for breakdown point r.
BiweightTuning s_estimator_tuning(double breakdown);

// Bivariate S-estimator with Tukey's biweight, solved by a reweighting
// fixed point from MCD-derived starts.
ScatterResult s_estimator(const DataMatrix& data, double breakdown, const SeedSpec& seed);

// v12 / sqrt(v11 * v22), clipped to [-1, 1].
double corr_from_cov(const SymMat2& v);

struct EstimatorDef {
  EstimatorId id;
  std::string_view name;
  bool randomized;  // consumes the SeedSpec
  bool in_all;      // member of the standard 13-estimator set
  CorrEstimate (*run)(const DataMatrix&, const SeedSpec&);
};

std::span<const EstimatorDef> estimator_registry();
const EstimatorDef* find_estimator(std::string_view name);
const EstimatorDef& estimator_info(EstimatorId id);

}  // namespace signcorr
