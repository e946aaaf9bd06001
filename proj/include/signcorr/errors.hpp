#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace signcorr {

// Iterative routine ran out of its iteration budget. Carries the last
// iterate and residual so callers can see how close it got.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate,
                   double residual, int iterations)
      : std::runtime_error(what),
        last_iterate_(std::move(last_iterate)),
        residual_(residual),
        iterations_(iterations) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  std::vector<double> last_iterate_;
  double residual_;
  int iterations_;
};

// The sample carries no usable information for the requested estimate:
// constant margin, collinear data, zero robust scale, singular subsets.
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace signcorr
