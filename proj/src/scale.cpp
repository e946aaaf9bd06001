#include "signcorr/scale.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "signcorr/errors.hpp"
#include "signcorr/numerics.hpp"

namespace signcorr {

namespace {

constexpr double kMadConsistency = 1.482602218505602;  // 1 / Phi^{-1}(3/4)

// 1 / (sqrt(2) * Phi^{-1}(5/8))
constexpr double kQnConsistency = 2.2191444659850757;

// Count pairs i < j (on sorted x) with x[j] - x[i] <= t.
std::uint64_t count_pairs_below(const std::vector<double>& sorted, double t) {
  std::uint64_t count = 0;
  std::size_t i = 0;
  for (std::size_t j = 1; j < sorted.size(); ++j) {
    while (i < j && sorted[j] - sorted[i] > t) ++i;
    count += j - i;
  }
  return count;
}

}  // namespace

double median_of(std::span<const double> x) {
  if (x.empty()) throw std::domain_error("median_of: empty sample");
  std::vector<double> v(x.begin(), x.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + (mid - 1), v.begin() + mid);
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

ScaleEstimate mad(std::span<const double> x, bool scaled) {
  if (x.empty()) throw std::domain_error("mad: empty sample");
  const double med = median_of(x);
  std::vector<double> dev(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) dev[i] = std::abs(x[i] - med);
  const double m = median_of(dev);
  return {scaled ? kMadConsistency * m : m, ScaleMethod::Mad};
}

ScaleEstimate qn(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw std::domain_error("qn: need n >= 2");

  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());

  const std::uint64_t half = n / 2 + 1;
  const std::uint64_t k = half * (half - 1) / 2;  // C(floor(n/2)+1, 2)

  const std::uint64_t zero_pairs = count_pairs_below(sorted, 0.0);
  if (zero_pairs >= k) return {0.0, ScaleMethod::Qn};  // the statistic is a tie

  // Bisect on the value until few candidate differences remain, then
  // enumerate them for the exact order statistic.
  double lo = 0.0;  // exclusive bound, count below_lo <= lo
  double hi = sorted.back() - sorted.front();
  std::uint64_t below_lo = zero_pairs;
  std::uint64_t below_hi = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  while (below_hi - below_lo > 4096) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval at fp resolution
    const std::uint64_t c = count_pairs_below(sorted, mid);
    if (c >= k) {
      hi = mid;
      below_hi = c;
    } else {
      lo = mid;
      below_lo = c;
    }
  }
  if (below_hi - below_lo > 4096) {
    // Massive ties at fp resolution; every candidate equals hi.
    return {kQnConsistency * hi, ScaleMethod::Qn};
  }

  // Candidates are differences in (lo, hi].
  std::vector<double> cand;
  cand.reserve(static_cast<std::size_t>(below_hi - below_lo));
  std::size_t i = 0;
  for (std::size_t j = 1; j < n; ++j) {
    while (i < j && sorted[j] - sorted[i] > hi) ++i;
    // d > lo requires sorted[t] < sorted[j] - lo.
    const auto cut = std::lower_bound(sorted.begin() + static_cast<std::ptrdiff_t>(i),
                                      sorted.begin() + static_cast<std::ptrdiff_t>(j),
                                      sorted[j] - lo);
    for (auto it = sorted.begin() + static_cast<std::ptrdiff_t>(i); it != cut; ++it) {
      cand.push_back(sorted[j] - *it);
    }
  }
  const std::uint64_t rank = k - below_lo;  // 1-based within candidates
  std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   cand.end());
  return {kQnConsistency * cand[rank - 1], ScaleMethod::Qn};
}

ScaleEstimate tau_scale(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw std::domain_error("tau_scale: need n >= 2");

  const double med = median_of(x);
  const double sigma0 = mad(x, false).value;
  if (!(sigma0 > 0.0)) {
    throw DegeneracyError("tau_scale: zero MAD");
  }

  constexpr double c1 = 4.5;
  constexpr double c2 = 3.0;

  double wsum = 0.0, wxsum = 0.0;
  for (double xi : x) {
    const double u = (xi - med) / sigma0;
    if (std::abs(u) <= c1) {
      const double t = 1.0 - (u / c1) * (u / c1);
      const double w = t * t;
      wsum += w;
      wxsum += w * xi;
    }
  }
  const double mu = wxsum / wsum;

  double acc = 0.0;
  for (double xi : x) {
    const double u = (xi - mu) / sigma0;
    acc += std::min(u * u, c2 * c2);
  }
  const double var = sigma0 * sigma0 / static_cast<double>(n) * acc;
  return {std::sqrt(var), ScaleMethod::TauScale};
}

double tau_scale_normal_constant() {
  // Population value at N(0,1): sigma0 = Phi^{-1}(3/4), truncation at
  // c2 * sigma0; E min(X^2, (c2 s0)^2) in closed Gaussian forms.
  const double s0 = std_normal_quantile(0.75);
  const double c = 3.0 * s0;
  const double trunc2 = (2.0 * std_normal_cdf(c) - 1.0) - 2.0 * c * std_normal_pdf(c);
  const double tail = 2.0 * (1.0 - std_normal_cdf(c));
  return std::sqrt(trunc2 + c * c * tail);
}

}  // namespace signcorr
