#include "signcorr/rng.hpp"

#include <cmath>
#include <stdexcept>

#include "signcorr/numerics.hpp"

namespace signcorr {

double RandomStream::normal() { return std_normal_quantile(uniform01()); }

double RandomStream::exponential() { return -std::log(uniform01()); }

double RandomStream::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw std::domain_error("gamma: shape and scale must be positive");
  }
  if (shape < 1.0) {
    const double boost = std::pow(uniform01(), 1.0 / shape);
    return gamma(shape + 1.0, scale) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = normal();
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
  }
}

}  // namespace signcorr
