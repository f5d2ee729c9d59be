#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace painreg {

// Deterministic RNG wrapper. mt19937_64 output is specified by the standard,
// but the std distributions are not, so the transforms live here to keep
// generated streams identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; pairs are cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  // Uniform index in [0, n). Modulo bias is negligible for n << 2^64.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(gen_() % static_cast<std::uint64_t>(n));
  }

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// FNV-1a over a string, mixed with a base seed. Used to derive per-fold
// seeds that do not shift when unrelated subjects are added or removed.
inline std::uint64_t derive_seed(std::uint64_t base_seed, const std::string& key) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  h ^= base_seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace painreg
