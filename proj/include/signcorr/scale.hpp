#pragma once

#include <span>

namespace signcorr {

enum class ScaleMethod { Mad, Qn, TauScale };

// A robust scale estimate; value 0 is the degeneracy signal (over half
// of the sample tied, or all points equal).
struct ScaleEstimate {
  double value = 0.0;
  ScaleMethod method = ScaleMethod::Mad;
};

double median_of(std::span<const double> x);

// Median absolute deviation about the median; the scaled variant applies
// the normal consistency factor 1.482602218505602.
ScaleEstimate mad(std::span<const double> x, bool scaled = false);

// k-th order statistic of the pairwise absolute differences,
// k = C(floor(n/2) + 1, 2), scaled by 1/(sqrt(2) * Phi^{-1}(5/8)).
// Selection by value-space bisection, O(n log n) time, O(n) memory.
ScaleEstimate qn(std::span<const double> x);

// Truncated second-moment scale about a weighted location, sigma_0 = raw
// MAD, tuning c1 = 4.5 (location weights) and c2 = 3 (truncation). No
// normal consistency factor is applied; it cancels in correlation use.
ScaleEstimate tau_scale(std::span<const double> x);

// Population value of tau_scale at the standard normal (used by tests
// and callers that need the standalone scale on the sigma scale).
double tau_scale_normal_constant();

}  // namespace signcorr
