#include "signcorr/data.hpp"

#include <cmath>
#include <stdexcept>

namespace signcorr {

DataMatrix DataMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::domain_error("DataMatrix: no rows");
  const std::size_t p = rows.front().size();
  if (p == 0) throw std::domain_error("DataMatrix: empty rows");
  DataMatrix d(rows.size(), p);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != p) {
      throw std::domain_error("DataMatrix: ragged rows (column count varies)");
    }
    for (std::size_t j = 0; j < p; ++j) d(i, j) = rows[i][j];
  }
  d.require_finite("DataMatrix");
  return d;
}

DataMatrix DataMatrix::from_pairs(std::initializer_list<std::pair<double, double>> pts) {
  DataMatrix d(pts.size(), 2);
  std::size_t i = 0;
  for (const auto& [x, y] : pts) {
    d(i, 0) = x;
    d(i, 1) = y;
    ++i;
  }
  d.require_finite("DataMatrix");
  return d;
}

DataMatrix DataMatrix::column_pair(std::size_t j0, std::size_t j1) const {
  if (j0 >= p_ || j1 >= p_) throw std::domain_error("column_pair: column out of range");
  DataMatrix d(n_, 2);
  for (std::size_t i = 0; i < n_; ++i) {
    d(i, 0) = (*this)(i, j0);
    d(i, 1) = (*this)(i, j1);
  }
  return d;
}

void DataMatrix::require_finite(const char* who) const {
  for (double x : v_) {
    if (!std::isfinite(x)) throw std::domain_error(std::string(who) + ": non-finite entry");
  }
}

}  // namespace signcorr
