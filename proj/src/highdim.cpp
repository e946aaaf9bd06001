#include "signcorr/highdim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "signcorr/errors.hpp"
#include "signcorr/estimators.hpp"

namespace signcorr {

namespace {

struct PairTask {
  std::size_t i;
  std::size_t j;
};

}  // namespace

CorrMatrix pairwise_corr_matrix(const DataMatrix& data, const PairwiseOptions& options) {
  const std::size_t p = data.cols();
  if (p < 2) throw std::domain_error("pairwise_corr_matrix: need p >= 2");
  const EstimatorDef& def = estimator_info(options.estimator);

  std::vector<PairTask> tasks;
  tasks.reserve(p * (p - 1) / 2);
  for (std::size_t i = 0; i + 1 < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) tasks.push_back({i, j});
  }

  CorrMatrix out;
  out.p = p;
  out.values.assign(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) out.at(i, i) = 1.0;

  std::mutex warn_mutex;
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1, std::memory_order_relaxed);
      if (t >= tasks.size()) return;
      const auto [i, j] = tasks[t];
      const DataMatrix pair = data.column_pair(i, j);
      double value = 0.0;
      try {
        value = def.run(pair, options.seed.derive(t)).value;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(warn_mutex);
        out.warnings.push_back({i, j, e.what()});
        value = 0.0;  // degenerate pair falls back to no correlation
      }
      out.at(i, j) = value;
      out.at(j, i) = value;
    }
  };

  int workers = options.workers;
  if (workers <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    workers = hw == 0 ? 1 : static_cast<int>(hw);
  }
  if (workers <= 1 || tasks.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int count = std::min<std::size_t>(static_cast<std::size_t>(workers), tasks.size());
    for (int w = 0; w < count; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    // Warning order must not depend on completion order.
    std::sort(out.warnings.begin(), out.warnings.end(),
              [](const PairWarning& a, const PairWarning& b) {
                return a.i < b.i || (a.i == b.i && a.j < b.j);
              });
  }
  return out;
}

EigenSym eig_sym(const std::vector<double>& matrix, std::size_t p) {
  if (matrix.size() != p * p) throw std::domain_error("eig_sym: size mismatch");
  std::vector<double> a = matrix;
  std::vector<double> v(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) v[i * p + i] = 1.0;

  // Cyclic Jacobi sweeps until the off-diagonal mass is negligible.
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i + 1 < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) off += a[i * p + j] * a[i * p + j];
    }
    if (off < 1e-26 * static_cast<double>(p * p)) break;

    for (std::size_t i = 0; i + 1 < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        const double apq = a[i * p + j];
        if (apq == 0.0) continue;
        const double app = a[i * p + i];
        const double aqq = a[j * p + j];
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                      : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < p; ++k) {
          const double aik = a[k * p + i];
          const double ajk = a[k * p + j];
          a[k * p + i] = c * aik - s * ajk;
          a[k * p + j] = s * aik + c * ajk;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const double aik = a[i * p + k];
          const double ajk = a[j * p + k];
          a[i * p + k] = c * aik - s * ajk;
          a[j * p + k] = s * aik + c * ajk;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const double vik = v[k * p + i];
          const double vjk = v[k * p + j];
          v[k * p + i] = c * vik - s * vjk;
          v[k * p + j] = s * vik + c * vjk;
        }
      }
    }
  }

  EigenSym out;
  out.values.resize(p);
  for (std::size_t i = 0; i < p; ++i) out.values[i] = a[i * p + i];

  // Sort descending, permuting eigenvector columns alongside.
  std::vector<std::size_t> order(p);
  for (std::size_t i = 0; i < p; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return out.values[x] > out.values[y];
  });
  EigenSym sorted;
  sorted.values.resize(p);
  sorted.vectors.resize(p * p);
  for (std::size_t c = 0; c < p; ++c) {
    sorted.values[c] = out.values[order[c]];
    for (std::size_t r = 0; r < p; ++r) {
      sorted.vectors[r * p + c] = v[r * p + order[c]];
    }
  }
  return sorted;
}

double min_eigenvalue(const CorrMatrix& r) {
  const EigenSym e = eig_sym(r.values, r.p);
  return e.values.back();
}

CorrMatrix psd_repair(const CorrMatrix& r) {
  const std::size_t p = r.p;
  if (p == 0) throw std::domain_error("psd_repair: empty matrix");
  const EigenSym e = eig_sym(r.values, p);

  constexpr double kFloor = 1e-8;
  if (e.values.back() >= -1e-10) {
    CorrMatrix out = r;  // already PSD within tolerance; exact idempotence
    out.psd_repaired = true;
    return out;
  }

  std::vector<double> clipped = e.values;
  for (double& x : clipped) x = std::max(x, kFloor);

  CorrMatrix out;
  out.p = p;
  out.warnings = r.warnings;
  out.psd_repaired = true;
  out.values.assign(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < p; ++k) {
        acc += e.vectors[i * p + k] * clipped[k] * e.vectors[j * p + k];
      }
      out.values[i * p + j] = acc;
      out.values[j * p + i] = acc;
    }
  }
  // Rescale to unit diagonal; a congruence, so definiteness survives.
  std::vector<double> d(p);
  for (std::size_t i = 0; i < p; ++i) d[i] = 1.0 / std::sqrt(out.at(i, i));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) out.at(i, j) *= d[i] * d[j];
    out.at(i, i) = 1.0;
  }
  return out;
}

}  // namespace signcorr
