#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "signcorr/numerics.hpp"

namespace signcorr {

// n x p sample matrix, observations as rows. Row-major storage.
class DataMatrix {
 public:
  DataMatrix() = default;
  DataMatrix(std::size_t n, std::size_t p) : n_(n), p_(p), v_(n * p, 0.0) {}

  // Validates finite entries and a constant column count.
  static DataMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static DataMatrix from_pairs(std::initializer_list<std::pair<double, double>> pts);

  std::size_t rows() const noexcept { return n_; }
  std::size_t cols() const noexcept { return p_; }

  double& operator()(std::size_t i, std::size_t j) { return v_[i * p_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v_[i * p_ + j]; }

  std::span<const double> row(std::size_t i) const { return {v_.data() + i * p_, p_}; }
  std::span<double> row(std::size_t i) { return {v_.data() + i * p_, p_}; }

  Vec2 row2(std::size_t i) const { return {v_[i * p_], v_[i * p_ + 1]}; }

  // Two named columns as a fresh n x 2 matrix (pairwise estimation).
  DataMatrix column_pair(std::size_t j0, std::size_t j1) const;

  void require_finite(const char* who) const;

 private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<double> v_;
};

}  // namespace signcorr
