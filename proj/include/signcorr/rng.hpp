#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace signcorr {

// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based generator. Output i depends only on (key, i), so streams
// with distinct keys can be consumed from any thread without sharing state.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) noexcept : state_(key) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform strictly inside (0,1); safe to feed to inverse CDFs.
  double uniform01() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the inverse CDF: exactly one uniform per draw,
  // which keeps substream offsets stable.
  double normal();

  double exponential();  // Exp(1)

  // Marsaglia-Tsang; draw count varies (rejection), fine within one stream.
  double gamma(double shape, double scale);

  double chi_square(double df) { return gamma(0.5 * df, 2.0); }

 private:
  std::uint64_t state_;
};

// Derivation of a child key from a parent key and a path component.
// Injective in the component for a fixed parent.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t component) noexcept {
  return mix64(mix64(parent ^ 0xd1b54a32d192ed03ULL) + component);
}

// Master seed plus a derivation path. Identical (master, path) yield an
// identical stream on every platform and worker count.
class SeedSpec {
 public:
  explicit SeedSpec(std::uint64_t master) : master_(master) {}
  SeedSpec(std::uint64_t master, std::vector<std::uint64_t> path)
      : master_(master), path_(std::move(path)) {}

  SeedSpec derive(std::uint64_t component) const {
    std::vector<std::uint64_t> p = path_;
    p.push_back(component);
    return SeedSpec(master_, std::move(p));
  }

  std::uint64_t stream_id() const noexcept {
    std::uint64_t key = mix64(master_ ^ 0x9e3779b97f4a7c15ULL);
    for (std::uint64_t c : path_) key = derive_key(key, c);
    return key;
  }

  RandomStream stream() const noexcept { return RandomStream(stream_id()); }

  std::uint64_t master() const noexcept { return master_; }
  const std::vector<std::uint64_t>& path() const noexcept { return path_; }

 private:
  std::uint64_t master_;
  std::vector<std::uint64_t> path_;
};

}  // namespace signcorr
