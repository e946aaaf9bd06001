#include "signcorr/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "signcorr/errors.hpp"
#include "signcorr/numerics.hpp"

namespace signcorr {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> column(const DataMatrix& data, std::size_t j) {
  std::vector<double> v(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) v[i] = data(i, j);
  return v;
}

bool is_constant(std::span<const double> x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *lo == *hi;
}

void require_bivariate(const DataMatrix& data, const char* who) {
  if (data.cols() != 2) throw std::domain_error(std::string(who) + ": expected two columns");
  if (data.rows() < 2) throw std::domain_error(std::string(who) + ": need n >= 2");
}

// Midranks, 1-based.
std::vector<double> midranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = r;
    i = j + 1;
  }
  return rank;
}

double pearson_of(std::span<const double> x, std::span<const double> y, const char* who) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw DegeneracyError(std::string(who) + ": constant margin");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

bool has_ties(std::span<const double> x) {
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) != v.end();
}

// Inversions of v by merge sort; v is consumed.
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& buf) {
  const std::size_t n = v.size();
  std::uint64_t inv = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
      const std::size_t mid = lo + width;
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[i] <= v[j]) {
          buf[k++] = v[i++];
        } else {
          inv += mid - i;
          buf[k++] = v[j++];
        }
      }
      while (i < mid) buf[k++] = v[i++];
      while (j < hi) buf[k++] = v[j++];
      std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
                buf.begin() + static_cast<std::ptrdiff_t>(hi),
                v.begin() + static_cast<std::ptrdiff_t>(lo));
    }
  }
  return inv;
}

SymMat2 sample_cov(const DataMatrix& data, std::span<const std::size_t> subset) {
  const std::size_t m = subset.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i : subset) {
    mx += data(i, 0);
    my += data(i, 1);
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  SymMat2 c;
  for (std::size_t i : subset) {
    const double dx = data(i, 0) - mx;
    const double dy = data(i, 1) - my;
    c.s11 += dx * dx;
    c.s12 += dx * dy;
    c.s22 += dy * dy;
  }
  const double denom = static_cast<double>(m - 1);
  c.s11 /= denom;
  c.s12 /= denom;
  c.s22 /= denom;
  return c;
}

Vec2 sample_mean(const DataMatrix& data, std::span<const std::size_t> subset) {
  Vec2 m;
  for (std::size_t i : subset) {
    m.x += data(i, 0);
    m.y += data(i, 1);
  }
  const double inv = 1.0 / static_cast<double>(subset.size());
  return {m.x * inv, m.y * inv};
}

// Quickselect with a branchless Lomuto partition: no data-dependent
// branches in the inner loop, so it runs well ahead of introselect on
// the short arrays the projection loop feeds it. Permutes a[0..n) such
// that a[k] is the k-th smallest, everything before it no larger and
// everything after it no smaller. Progress on ties is guaranteed by the
// equal-peeling second partition.
double select_kth(double* a, std::size_t n, std::size_t k) {
  while (n > 16) {
    const double x = a[0];
    const double y = a[n / 2];
    const double z = a[n - 1];
    const double pivot =
        std::max(std::min(x, y), std::min(std::max(x, y), z));  // median of 3

    std::size_t lt = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = a[i];
      a[i] = a[lt];
      a[lt] = v;
      lt += (v < pivot) ? 1 : 0;
    }
    if (k < lt) {
      n = lt;
      continue;
    }
    std::size_t le = lt;
    for (std::size_t i = lt; i < n; ++i) {
      const double v = a[i];
      a[i] = a[le];
      a[le] = v;
      le += (v <= pivot) ? 1 : 0;
    }
    if (k < le) return pivot;  // the k-th element equals the pivot
    a += le;
    n -= le;
    k -= le;
  }
  for (std::size_t i = 0; i <= k; ++i) {
    std::size_t m = i;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (a[j] < a[m]) m = j;
    }
    std::swap(a[i], a[m]);
  }
  return a[k];
}

// Squared Mahalanobis distances for a 2x2 scatter.
void mahalanobis2(const DataMatrix& data, Vec2 mu, const SymMat2& v,
                  std::vector<double>& out) {
  const double det = v.det();
  const double i11 = v.s22 / det;
  const double i12 = -v.s12 / det;
  const double i22 = v.s11 / det;
  const std::size_t n = data.rows();
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = data(i, 0) - mu.x;
    const double dy = data(i, 1) - mu.y;
    out[i] = dx * (i11 * dx + i12 * dy) + dy * (i12 * dx + i22 * dy);
  }
}

}  // namespace

CorrEstimate pearson(const DataMatrix& data) {
  require_bivariate(data, "pearson");
  const auto x = column(data, 0);
  const auto y = column(data, 1);
  if (is_constant(x) || is_constant(y)) {
    throw DegeneracyError("pearson: constant margin");
  }
  CorrEstimate est;
  est.id = EstimatorId::Pearson;
  est.n_used = static_cast<int>(data.rows());
  est.value = pearson_of(x, y, "pearson");
  return est;
}

CorrEstimate gaussian_rank_corr(const DataMatrix& data) {
  require_bivariate(data, "gaussian_rank_corr");
  const auto x = column(data, 0);
  const auto y = column(data, 1);
  if (is_constant(x) || is_constant(y)) {
    throw DegeneracyError("gaussian_rank_corr: constant margin");
  }
  const std::size_t n = data.rows();
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  const double denom = static_cast<double>(n + 1);
  double cn = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double s = std_normal_quantile(static_cast<double>(i) / denom);
    cn += s * s;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += std_normal_quantile(rx[i] / denom) * std_normal_quantile(ry[i] / denom);
  }
  CorrEstimate est;
  est.id = EstimatorId::GaussianRank;
  est.n_used = static_cast<int>(n);
  est.value = std::clamp(acc / cn, -1.0, 1.0);
  return est;
}

CorrEstimate spearman_corr(const DataMatrix& data, bool consistent) {
  require_bivariate(data, "spearman_corr");
  const auto x = column(data, 0);
  const auto y = column(data, 1);
  if (is_constant(x) || is_constant(y)) {
    throw DegeneracyError("spearman_corr: constant margin");
  }
  const double raw = pearson_of(midranks(x), midranks(y), "spearman_corr");
  CorrEstimate est;
  est.id = EstimatorId::Spearman;
  est.n_used = static_cast<int>(data.rows());
  est.diagnostics["raw"] = raw;
  est.value = consistent ? 2.0 * std::sin(kPi * raw / 6.0) : raw;
  return est;
}

CorrEstimate kendall_corr(const DataMatrix& data, bool consistent) {
  require_bivariate(data, "kendall_corr");
  const auto x = column(data, 0);
  const auto y = column(data, 1);
  if (is_constant(x) || is_constant(y)) {
    throw DegeneracyError("kendall_corr: constant margin");
  }
  const std::size_t n = data.rows();
  const double total = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);

  double raw;
  if (!has_ties(x) && !has_ties(y)) {
    // Sort by x, count inversions of the y sequence.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ys(n), buf(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
    const std::uint64_t inv = count_inversions(ys, buf);
    raw = (total - 2.0 * static_cast<double>(inv)) / total;
  } else {
    // Ties contribute zero-sign pairs but keep the full denominator.
    std::int64_t acc = 0;
    for (std::size_t i = 1; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        const double prod = (x[i] - x[j]) * (y[i] - y[j]);
        acc += (prod > 0.0) - (prod < 0.0);
      }
    }
    raw = static_cast<double>(acc) / total;
  }

  CorrEstimate est;
  est.id = EstimatorId::Kendall;
  est.n_used = static_cast<int>(n);
  est.diagnostics["raw"] = raw;
  est.value = consistent ? std::sin(kPi * raw / 2.0) : raw;
  return est;
}

CorrEstimate quadrant_corr(const DataMatrix& data, bool consistent) {
  require_bivariate(data, "quadrant_corr");
  const auto x = column(data, 0);
  const auto y = column(data, 1);
  const double medx = median_of(x);
  const double medy = median_of(y);
  const std::size_t n = data.rows();
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double prod = (x[i] - medx) * (y[i] - medy);
    acc += (prod > 0.0) - (prod < 0.0);
  }
  const double raw = static_cast<double>(acc) / static_cast<double>(n);
  CorrEstimate est;
  est.id = EstimatorId::Quadrant;
  est.n_used = static_cast<int>(n);
  est.diagnostics["raw"] = raw;
  est.value = consistent ? std::sin(kPi * raw / 2.0) : raw;
  return est;
}

namespace {

// Scale for GK margins / combinations: 0 for a constant sample, the
// estimator's value otherwise.
double gk_scale(std::span<const double> v, ScaleMethod method) {
  if (is_constant(v)) return 0.0;
  return (method == ScaleMethod::Qn) ? qn(v).value : tau_scale(v).value;
}

}  // namespace

CorrEstimate gk_corr(const DataMatrix& data, ScaleMethod scale) {
  require_bivariate(data, "gk_corr");
  if (scale == ScaleMethod::Mad) {
    throw std::domain_error("gk_corr: supported scales are Qn and TauScale");
  }
  const auto x = column(data, 0);
  const auto y = column(data, 1);
  const double alpha = gk_scale(x, scale);
  const double beta = gk_scale(y, scale);
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw DegeneracyError("gk_corr: degenerate margin scale");
  }
  const std::size_t n = data.rows();
  std::vector<double> sum(n), diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = x[i] / alpha;
    const double v = y[i] / beta;
    sum[i] = u + v;
    diff[i] = u - v;
  }
  const double su = gk_scale(sum, scale);
  const double sv = gk_scale(diff, scale);
  const double denom = su * su + sv * sv;
  if (!(denom > 0.0)) throw DegeneracyError("gk_corr: zero denominator");

  CorrEstimate est;
  est.id = (scale == ScaleMethod::Qn) ? EstimatorId::GkQn : EstimatorId::GkTau;
  est.n_used = static_cast<int>(n);
  est.diagnostics["scale_x"] = alpha;
  est.diagnostics["scale_y"] = beta;
  est.value = std::clamp((su * su - sv * sv) / denom, -1.0, 1.0);
  return est;
}

ScatterResult tyler_shape(const DataMatrix& data, std::optional<Vec2> center, double tol,
                          int max_iter) {
  require_bivariate(data, "tyler_shape");
  if (data.rows() < 3) throw std::domain_error("tyler_shape: need n >= 3");

  const Vec2 mu = center ? *center
                         : [&] {
                             const auto med = spatial_median(data);
                             return Vec2{med.point[0], med.point[1]};
                           }();

  // Centered observations; rows equal to the center are dropped.
  std::vector<Vec2> r;
  r.reserve(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const Vec2 d{data(i, 0) - mu.x, data(i, 1) - mu.y};
    if (d.x != 0.0 || d.y != 0.0) r.push_back(d);
  }
  if (r.size() < 3) throw DegeneracyError("tyler_shape: too few distinct observations");

  SymMat2 v{1.0, 0.0, 1.0};
  double residual = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    const double det = v.det();
    if (!(det > 1e-12)) {
      throw DegeneracyError("tyler_shape: data concentrated on a line through the center");
    }
    const double i11 = v.s22 / det;
    const double i12 = -v.s12 / det;
    const double i22 = v.s11 / det;

    SymMat2 m;
    for (const Vec2& d : r) {
      const double q = d.x * (i11 * d.x + i12 * d.y) + d.y * (i12 * d.x + i22 * d.y);
      m.s11 += d.x * d.x / q;
      m.s12 += d.x * d.y / q;
      m.s22 += d.y * d.y / q;
    }
    const double scale = 2.0 / m.trace();
    const SymMat2 next{m.s11 * scale, m.s12 * scale, m.s22 * scale};
    residual = std::max({std::abs(next.s11 - v.s11), std::abs(next.s12 - v.s12),
                         std::abs(next.s22 - v.s22)});
    v = next;
    if (residual <= tol) {
      ScatterResult out;
      out.scatter = {mu, v, ScatterMethod::Tyler, iter + 1};
      out.corr.id = EstimatorId::Tyler;
      out.corr.value = corr_from_cov(v);
      out.corr.n_used = static_cast<int>(data.rows());
      out.corr.diagnostics["iterations"] = iter + 1;
      return out;
    }
  }
  throw ConvergenceError("tyler_shape: no convergence", {v.s11, v.s12, v.s22}, residual,
                         max_iter);
}

namespace {

struct McdCandidate {
  std::vector<std::size_t> subset;
  Vec2 mean;
  SymMat2 cov;
  double det = 0.0;
  std::vector<double> det_sequence;
};

// One concentration step: keep the h observations closest in the metric
// of the current estimate. Never increases the determinant. Ties at the
// threshold distance break by index, so the subset is deterministic;
// it also comes out index-sorted.
void c_step(const DataMatrix& data, std::size_t h, McdCandidate& cand,
            std::vector<double>& dist, std::vector<double>& work) {
  mahalanobis2(data, cand.mean, cand.cov, dist);
  const std::size_t n = data.rows();
  work = dist;
  const double threshold = select_kth(work.data(), n, h - 1);

  cand.subset.clear();
  for (std::size_t i = 0; i < n && cand.subset.size() < h; ++i) {
    if (dist[i] < threshold) cand.subset.push_back(i);
  }
  for (std::size_t i = 0; i < n && cand.subset.size() < h; ++i) {
    if (dist[i] == threshold) cand.subset.push_back(i);
  }
  std::sort(cand.subset.begin(), cand.subset.end());
  cand.mean = sample_mean(data, cand.subset);
  cand.cov = sample_cov(data, cand.subset);
  cand.det = cand.cov.det();
}

}  // namespace

ScatterResult mcd(const DataMatrix& data, const McdOptions& options, const SeedSpec& seed,
                  McdDiagnostics* diagnostics) {
  require_bivariate(data, "mcd");
  const std::size_t n = data.rows();
  constexpr std::size_t p = 2;
  if (n < 2 * (p + 1)) throw std::domain_error("mcd: need n >= 2(p+1)");
  if (!(options.alpha >= 0.0 && options.alpha < 1.0)) {
    throw std::domain_error("mcd: alpha must lie in [0, 1)");
  }
  const std::size_t h =
      static_cast<std::size_t>(std::floor((1.0 - options.alpha) * static_cast<double>(n)));
  if (h < p + 1) throw std::domain_error("mcd: subset size h below p+1");

  RandomStream stream = seed.stream();
  std::vector<double> dist;
  std::vector<double> work;

  std::vector<McdCandidate> finalists;
  if (h == n) {
    McdCandidate all;
    all.subset.resize(n);
    for (std::size_t i = 0; i < n; ++i) all.subset[i] = i;
    all.mean = sample_mean(data, all.subset);
    all.cov = sample_cov(data, all.subset);
    all.det = all.cov.det();
    all.det_sequence.push_back(all.det);
    if (!(all.det > 0.0)) throw DegeneracyError("mcd: singular sample covariance");
    finalists.push_back(std::move(all));
  } else {
    std::vector<McdCandidate> pool;
    pool.reserve(static_cast<std::size_t>(options.n_starts));
    for (int s = 0; s < options.n_starts; ++s) {
      // (p+1)-subset, inflated while singular.
      std::vector<std::size_t> subset;
      while (subset.size() < n) {
        const std::size_t pick = static_cast<std::size_t>(stream.next_u64() % n);
        if (std::find(subset.begin(), subset.end(), pick) != subset.end()) continue;
        subset.push_back(pick);
        if (subset.size() < p + 1) continue;
        if (sample_cov(data, subset).det() > 0.0) break;
      }
      McdCandidate cand;
      cand.subset = std::move(subset);
      cand.mean = sample_mean(data, cand.subset);
      cand.cov = sample_cov(data, cand.subset);
      cand.det = cand.cov.det();
      if (!(cand.det > 0.0)) continue;
      // Two prefilter concentration steps.
      c_step(data, h, cand, dist, work);
      if (!(cand.det > 0.0)) continue;
      c_step(data, h, cand, dist, work);
      if (!(cand.det > 0.0)) continue;
      pool.push_back(std::move(cand));
    }
    if (pool.empty()) throw DegeneracyError("mcd: all candidate subsets singular");

    std::stable_sort(pool.begin(), pool.end(),
                     [](const McdCandidate& a, const McdCandidate& b) { return a.det < b.det; });
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(options.n_keep),
                                                   pool.size());
    for (std::size_t i = 0; i < keep; ++i) {
      McdCandidate cand = pool[i];
      cand.det_sequence.push_back(cand.det);
      for (int it = 0; it < 100; ++it) {
        const double before = cand.det;
        const auto prev_subset = cand.subset;
        c_step(data, h, cand, dist, work);
        cand.det_sequence.push_back(cand.det);
        if (!(cand.det > 0.0)) break;
        if (cand.subset == prev_subset || cand.det >= before * (1.0 - 1e-12)) break;
      }
      if (cand.det > 0.0) finalists.push_back(std::move(cand));
    }
    if (finalists.empty()) throw DegeneracyError("mcd: all concentrated subsets singular");
  }

  const auto best = std::min_element(
      finalists.begin(), finalists.end(),
      [](const McdCandidate& a, const McdCandidate& b) { return a.det < b.det; });
  if (diagnostics) {
    diagnostics->det_sequences.clear();
    diagnostics->candidates.clear();
    for (const auto& c : finalists) {
      diagnostics->det_sequences.push_back(c.det_sequence);
      diagnostics->candidates.emplace_back(c.mean, c.cov);
    }
  }

  // Normal-model consistency for the raw h-subset covariance.
  double c_alpha = 1.0;
  if (h < n) {
    const double frac = static_cast<double>(h) / static_cast<double>(n);
    const double q = chi2_quantile(frac, 2);
    c_alpha = frac / chi2_cdf(q, 4);
  }
  Vec2 raw_mean = best->mean;
  SymMat2 raw_cov{best->cov.s11 * c_alpha, best->cov.s12 * c_alpha, best->cov.s22 * c_alpha};

  ScatterResult out;
  if (!options.reweight) {
    out.scatter = {raw_mean, raw_cov, ScatterMethod::RawMcd,
                   static_cast<int>(best->det_sequence.size())};
    out.corr.id = EstimatorId::RawMcd;
  } else {
    mahalanobis2(data, raw_mean, raw_cov, dist);
    const double cutoff = chi2_quantile(0.975, 2);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < n; ++i) {
      if (dist[i] <= cutoff) kept.push_back(i);
    }
    if (kept.size() < p + 1) throw DegeneracyError("mcd: reweighting kept too few points");
    const Vec2 wmean = sample_mean(data, kept);
    SymMat2 wcov = sample_cov(data, kept);
    const double c_w = 0.975 / chi2_cdf(cutoff, 4);
    wcov = {wcov.s11 * c_w, wcov.s12 * c_w, wcov.s22 * c_w};
    out.scatter = {wmean, wcov, ScatterMethod::WeightedMcd,
                   static_cast<int>(best->det_sequence.size())};
    out.corr.id = EstimatorId::WeightedMcd;
    out.corr.diagnostics["n_weighted"] = static_cast<double>(kept.size());
  }
  out.corr.value = corr_from_cov(out.scatter.cov);
  out.corr.n_used = static_cast<int>(n);
  return out;
}

namespace {

// Median that permutes its argument; no allocation.
double median_destructive(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  double m = select_kth(v.data(), v.size(), mid);
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

}  // namespace

ScatterResult stahel_donoho(const DataMatrix& data, int n_dirs, const SeedSpec& seed) {
  require_bivariate(data, "stahel_donoho");
  const std::size_t n = data.rows();
  if (n < 4) throw std::domain_error("stahel_donoho: need n >= 4");

  const std::uint64_t all_pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const bool exhaustive = all_pairs <= static_cast<std::uint64_t>(n_dirs);

  std::vector<double> proj(n), work(n), outly(n, 0.0);
  RandomStream stream = seed.stream();
  std::size_t used_dirs = 0;

  const auto process_direction = [&](Vec2 a) {
    const double len = std::hypot(a.x, a.y);
    if (len == 0.0) return;
    a = {a.x / len, a.y / len};
    for (std::size_t i = 0; i < n; ++i) proj[i] = a.x * data(i, 0) + a.y * data(i, 1);
    work = proj;
    const double med = median_destructive(work);
    for (std::size_t i = 0; i < n; ++i) work[i] = std::abs(proj[i] - med);
    const double s = 1.482602218505602 * median_destructive(work);
    if (!(s > 0.0)) return;  // degenerate direction, skipped
    ++used_dirs;
    const double inv = 1.0 / s;
    for (std::size_t i = 0; i < n; ++i) {
      outly[i] = std::max(outly[i], std::abs(proj[i] - med) * inv);
    }
  };

  if (exhaustive) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        process_direction(
            {data(j, 0) - data(i, 0), data(j, 1) - data(i, 1)});
      }
    }
  } else {
    for (int d = 0; d < n_dirs; ++d) {
      const std::size_t i = static_cast<std::size_t>(stream.next_u64() % n);
      std::size_t j = static_cast<std::size_t>(stream.next_u64() % n);
      if (j == i) j = (j + 1) % n;
      process_direction({data(j, 0) - data(i, 0), data(j, 1) - data(i, 1)});
    }
  }
  if (used_dirs == 0) throw DegeneracyError("stahel_donoho: all directions degenerate");

  const double c = std::sqrt(chi2_quantile(0.95, 2));
  double wsum = 0.0;
  Vec2 mu;
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = (outly[i] > c) ? (c / outly[i]) * (c / outly[i]) : 1.0;
    wsum += w[i];
    mu.x += w[i] * data(i, 0);
    mu.y += w[i] * data(i, 1);
  }
  mu = {mu.x / wsum, mu.y / wsum};
  SymMat2 v;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = data(i, 0) - mu.x;
    const double dy = data(i, 1) - mu.y;
    v.s11 += w[i] * dx * dx;
    v.s12 += w[i] * dx * dy;
    v.s22 += w[i] * dy * dy;
  }
  v = {v.s11 / wsum, v.s12 / wsum, v.s22 / wsum};

  ScatterResult out;
  out.scatter = {mu, v, ScatterMethod::StahelDonoho, 0};
  out.corr.id = EstimatorId::StahelDonoho;
  out.corr.value = corr_from_cov(v);
  out.corr.n_used = static_cast<int>(n);
  out.corr.diagnostics["directions"] = static_cast<double>(used_dirs);
  return out;
}

namespace {

double biweight_rho(double y, double c) {
  const double y2 = y * y;
  if (y2 >= c * c) return c * c / 6.0;
  return y2 / 2.0 - y2 * y2 / (2.0 * c * c) + y2 * y2 * y2 / (6.0 * c * c * c * c);
}

// psi(y)/y weight of the biweight rho.
double biweight_weight(double y, double c) {
  if (std::abs(y) >= c) return 0.0;
  const double t = 1.0 - (y / c) * (y / c);
  return t * t;
}

struct GaussLegendre {
  std::vector<double> nodes;    // on (0, 1)
  std::vector<double> weights;  // for the unit interval
};

// Nodes by Newton iteration on the Legendre recurrence.
const GaussLegendre& gauss_legendre_64() {
  static const GaussLegendre rule = [] {
    constexpr int m = 64;
    GaussLegendre r;
    r.nodes.resize(m);
    r.weights.resize(m);
    for (int i = 0; i < m; ++i) {
      double x = std::cos(kPi * (i + 0.75) / (m + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= m; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = m * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      r.nodes[i] = 0.5 * (1.0 + x);
      r.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
  }();
  return rule;
}

// E w_c(||Z||) for standard bivariate normal Z: Gauss-Legendre on [0, c]
// against the Rayleigh radial density plus the analytic tail.
double biweight_b_of_c(double c) {
  const GaussLegendre& rule = gauss_legendre_64();
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double s = c * rule.nodes[i];
    acc += rule.weights[i] * c * biweight_rho(s, c) * s * std::exp(-0.5 * s * s);
  }
  return acc + (c * c / 6.0) * std::exp(-0.5 * c * c);
}

}  // namespace

BiweightTuning s_estimator_tuning(double breakdown) {
  if (!(breakdown > 0.0 && breakdown <= 0.5)) {
    throw std::domain_error("s_estimator_tuning: breakdown must lie in (0, 1/2]");
  }
  static std::mutex mutex;
  static std::map<double, BiweightTuning> cache;
  std::lock_guard<std::mutex> lock(mutex);
  const auto it = cache.find(breakdown);
  if (it != cache.end()) return it->second;

  // r c^2/6 - b(c) is increasing in c; bisect.
  double lo = 0.1, hi = 20.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (breakdown * mid * mid / 6.0 - biweight_b_of_c(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  BiweightTuning tuning;
  tuning.c = 0.5 * (lo + hi);
  tuning.b = biweight_b_of_c(tuning.c);
  cache[breakdown] = tuning;
  return tuning;
}

namespace {

// Rescale v by k such that ave rho_c(d_i / sqrt(k)) = b; returns k.
// ave rho is decreasing in k; Newton with a bisection safeguard.
double m_scale_factor(const std::vector<double>& d2, double c, double b) {
  const double n = static_cast<double>(d2.size());
  const double c2 = c * c;
  double k = 1.0;
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100; ++it) {
    double rho_sum = 0.0;
    double slope_sum = 0.0;  // sum of psi(u) * u
    for (double q : d2) {
      const double u2 = q / k;
      if (u2 >= c2) {
        rho_sum += c2 / 6.0;
      } else {
        rho_sum += u2 * (0.5 - u2 / (2.0 * c2) + u2 * u2 / (6.0 * c2 * c2));
        const double t = 1.0 - u2 / c2;
        slope_sum += u2 * t * t;
      }
    }
    const double g = rho_sum / n - b;
    if (std::abs(g) <= 1e-13 * b) return k;
    if (g > 0.0) {
      lo = k;
    } else {
      hi = k;
    }
    const double gp = -slope_sum / (2.0 * k * n);
    double next = (gp < 0.0) ? k - g / gp : -1.0;
    if (!(next > lo) || !(next < hi)) {
      next = std::isfinite(hi) ? 0.5 * (lo + hi) : 4.0 * k;
    }
    if (next == k) return k;
    k = next;
  }
  return k;
}

}  // namespace

ScatterResult s_estimator(const DataMatrix& data, double breakdown, const SeedSpec& seed) {
  require_bivariate(data, "s_estimator");
  const std::size_t n = data.rows();
  if (n < 6) throw std::domain_error("s_estimator: need n >= 2(p+1)");
  const BiweightTuning tuning = s_estimator_tuning(breakdown);
  const double c = tuning.c;
  const double b = tuning.b;

  // Starts: the best 20 concentrated subsets from the MCD machinery,
  // deduplicated (many starts concentrate onto the same subset). The
  // IRLS refinement tolerates a lighter subset search than the MCD
  // estimator itself uses.
  McdOptions mcd_options;
  mcd_options.reweight = false;
  mcd_options.n_starts = 150;
  mcd_options.n_keep = 20;
  McdDiagnostics diag;
  std::vector<std::pair<Vec2, SymMat2>> starts;
  try {
    mcd(data, mcd_options, seed, &diag);
    for (const auto& cand : diag.candidates) {
      const bool dup = std::any_of(starts.begin(), starts.end(), [&](const auto& s) {
        return std::abs(s.first.x - cand.first.x) <= 1e-12 &&
               std::abs(s.first.y - cand.first.y) <= 1e-12 &&
               std::abs(s.second.s11 - cand.second.s11) <= 1e-12 &&
               std::abs(s.second.s12 - cand.second.s12) <= 1e-12 &&
               std::abs(s.second.s22 - cand.second.s22) <= 1e-12;
      });
      if (!dup) starts.push_back(cand);
    }
  } catch (const DegeneracyError&) {
    // fall through to the sample start below
  }
  {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    starts.emplace_back(sample_mean(data, all), sample_cov(data, all));
  }

  std::vector<double> d2;
  double best_det = std::numeric_limits<double>::infinity();
  std::optional<ScatterResult> best;

  for (const auto& [mu0, v0] : starts) {
    Vec2 mu = mu0;
    SymMat2 v = v0;
    if (!(v.det() > 0.0)) continue;
    // Normalize the start onto the constraint surface.
    mahalanobis2(data, mu, v, d2);
    {
      const double k = m_scale_factor(d2, c, b);
      v = {v.s11 * k, v.s12 * k, v.s22 * k};
    }

    bool converged = false;
    int iter = 0;
    for (; iter < 200; ++iter) {
      mahalanobis2(data, mu, v, d2);

      double wsum = 0.0;
      Vec2 mu_next;
      SymMat2 v_raw;
      for (std::size_t i = 0; i < n; ++i) {
        const double w = biweight_weight(std::sqrt(d2[i]), c);
        wsum += w;
        mu_next.x += w * data(i, 0);
        mu_next.y += w * data(i, 1);
      }
      if (!(wsum > 0.0)) break;
      mu_next = {mu_next.x / wsum, mu_next.y / wsum};
      for (std::size_t i = 0; i < n; ++i) {
        const double w = biweight_weight(std::sqrt(d2[i]), c);
        const double dx = data(i, 0) - mu_next.x;
        const double dy = data(i, 1) - mu_next.y;
        v_raw.s11 += w * dx * dx;
        v_raw.s12 += w * dx * dy;
        v_raw.s22 += w * dy * dy;
      }
      if (!(v_raw.det() > 0.0)) break;
      // Rescale the candidate onto the constraint surface before
      // comparing; both iterates then share the same normalization.
      mahalanobis2(data, mu_next, v_raw, d2);
      const double k = m_scale_factor(d2, c, b);
      const SymMat2 v_next{v_raw.s11 * k, v_raw.s12 * k, v_raw.s22 * k};

      const double change = std::max(
          {std::abs(v_next.s11 - v.s11), std::abs(v_next.s12 - v.s12),
           std::abs(v_next.s22 - v.s22), std::abs(mu_next.x - mu.x),
           std::abs(mu_next.y - mu.y)});
      const double scale = std::max({std::abs(v.s11), std::abs(v.s22), 1e-12});
      mu = mu_next;
      v = v_next;
      if (change <= 1e-9 * scale) {
        converged = true;
        break;
      }
    }
    if (!converged) continue;

    const double det = v.det();
    if (det < best_det) {
      best_det = det;
      ScatterResult out;
      out.scatter = {mu, v, ScatterMethod::SEstimator, iter};
      out.corr.id = EstimatorId::SEstimator;
      out.corr.value = corr_from_cov(v);
      out.corr.n_used = static_cast<int>(n);
      out.corr.diagnostics["iterations"] = iter;
      best = out;
    }
  }
  if (!best) {
    throw ConvergenceError("s_estimator: no start converged", {}, 0.0, 200);
  }
  return *best;
}

double corr_from_cov(const SymMat2& v) {
  if (!(v.s11 > 0.0) || !(v.s22 > 0.0)) {
    throw std::domain_error("corr_from_cov: nonpositive diagonal");
  }
  return std::clamp(v.s12 / std::sqrt(v.s11 * v.s22), -1.0, 1.0);
}

namespace {

CorrEstimate run_pearson(const DataMatrix& d, const SeedSpec&) { return pearson(d); }
CorrEstimate run_spatial(const DataMatrix& d, const SeedSpec&) { return spatial_sign_corr(d); }
CorrEstimate run_spatial2s(const DataMatrix& d, const SeedSpec&) {
  return two_stage_spatial_sign_corr(d);
}
CorrEstimate run_quadrant(const DataMatrix& d, const SeedSpec&) { return quadrant_corr(d); }
CorrEstimate run_kendall(const DataMatrix& d, const SeedSpec&) { return kendall_corr(d); }
CorrEstimate run_spearman(const DataMatrix& d, const SeedSpec&) { return spearman_corr(d); }
CorrEstimate run_grank(const DataMatrix& d, const SeedSpec&) { return gaussian_rank_corr(d); }
CorrEstimate run_gk_qn(const DataMatrix& d, const SeedSpec&) {
  return gk_corr(d, ScaleMethod::Qn);
}
CorrEstimate run_gk_tau(const DataMatrix& d, const SeedSpec&) {
  return gk_corr(d, ScaleMethod::TauScale);
}
CorrEstimate run_tyler(const DataMatrix& d, const SeedSpec&) { return tyler_shape(d).corr; }
CorrEstimate run_rmcd(const DataMatrix& d, const SeedSpec& s) {
  McdOptions o;
  o.reweight = false;
  return mcd(d, o, s).corr;
}
CorrEstimate run_wmcd(const DataMatrix& d, const SeedSpec& s) {
  McdOptions o;
  o.reweight = true;
  return mcd(d, o, s).corr;
}
CorrEstimate run_s(const DataMatrix& d, const SeedSpec& s) {
  return s_estimator(d, 0.5, s).corr;
}
CorrEstimate run_sd(const DataMatrix& d, const SeedSpec& s) {
  return stahel_donoho(d, 10000, s).corr;
}

constexpr EstimatorDef kRegistry[] = {
    {EstimatorId::Pearson, "pearson", false, true, run_pearson},
    {EstimatorId::SpatialSign, "spatial_sign", false, true, run_spatial},
    {EstimatorId::Quadrant, "quadrant", false, true, run_quadrant},
    {EstimatorId::Kendall, "kendall", false, true, run_kendall},
    {EstimatorId::Spearman, "spearman", false, true, run_spearman},
    {EstimatorId::GaussianRank, "gaussian_rank", false, true, run_grank},
    {EstimatorId::GkQn, "gk_qn", false, true, run_gk_qn},
    {EstimatorId::GkTau, "gk_tau", false, true, run_gk_tau},
    {EstimatorId::Tyler, "tyler", false, true, run_tyler},
    {EstimatorId::RawMcd, "rmcd", true, true, run_rmcd},
    {EstimatorId::WeightedMcd, "wmcd", true, true, run_wmcd},
    {EstimatorId::SEstimator, "s", true, true, run_s},
    {EstimatorId::StahelDonoho, "stahel_donoho", true, true, run_sd},
    {EstimatorId::SpatialSignTwoStage, "spatial_sign_2s", false, false, run_spatial2s},
};

}  // namespace

std::span<const EstimatorDef> estimator_registry() { return kRegistry; }

const EstimatorDef* find_estimator(std::string_view name) {
  for (const auto& def : kRegistry) {
    if (def.name == name) return &def;
  }
  return nullptr;
}

const EstimatorDef& estimator_info(EstimatorId id) {
  for (const auto& def : kRegistry) {
    if (def.id == id) return def;
  }
  throw std::logic_error("estimator_info: unknown estimator id");
}

}  // namespace signcorr
