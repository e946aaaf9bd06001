#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "signcorr/data.hpp"
#include "signcorr/rng.hpp"
#include "signcorr/sscm.hpp"

namespace signcorr {

struct PairWarning {
  std::size_t i = 0;
  std::size_t j = 0;
  std::string message;
};

// p x p symmetric correlation matrix with unit diagonal.
struct CorrMatrix {
  std::size_t p = 0;
  std::vector<double> values;  // row-major
  bool psd_repaired = false;
  std::vector<PairWarning> warnings;

  double& at(std::size_t i, std::size_t j) { return values[i * p + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * p + j]; }
};

struct PairwiseOptions {
  EstimatorId estimator = EstimatorId::SpatialSign;
  int workers = 0;  // 0 = hardware concurrency
  SeedSpec seed{0};
};

// Entry (i, j) is the bivariate estimator applied to columns (i, j);
// defined also for p > n. Degenerate pairs become 0 with a warning.
// Each unordered pair is evaluated exactly once.
CorrMatrix pairwise_corr_matrix(const DataMatrix& data, const PairwiseOptions& options);

// Symmetric eigendecomposition by cyclic Jacobi rotations.
// Eigenvalues descending; eigenvectors as columns of `vectors`.
struct EigenSym {
  std::vector<double> values;
  std::vector<double> vectors;  // row-major p x p
};
EigenSym eig_sym(const std::vector<double>& matrix, std::size_t p);

// Eigenvalue clipping at 1e-8 followed by a rescale to unit diagonal.
// Inputs already satisfying min eigenvalue >= -1e-10 pass through
// unchanged, which makes the repair exactly idempotent.
CorrMatrix psd_repair(const CorrMatrix& r);

double min_eigenvalue(const CorrMatrix& r);

}  // namespace signcorr
