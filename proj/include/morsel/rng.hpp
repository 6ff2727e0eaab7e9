#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "morsel/numeric.hpp"

namespace morsel {

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and up to three
// indices (sample index, epoch, example position, ...).  Every sampled
// quantity in the library gets its randomness through this, which is what
// makes results independent of the worker count.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix64(seed + 0x9e3779b97f4a7c15ULL);
  s = mix64(s ^ (a + 0xbf58476d1ce4e5b9ULL));
  s = mix64(s ^ (b + 0x94d049bb133111ebULL));
  s = mix64(s ^ (c + 0x2545f4914f6cdd1dULL));
  return s;
}

// Counter-mode splitmix64.  Small, fast, and identical on every platform,
// unlike std::uniform_*_distribution output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Unbiased uniform index in [0, n).
  std::size_t uniform_index(std::size_t n) {
    if (n <= 1) return 0;
    std::uint64_t threshold = (0ULL - n) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t x = next();
      if (x >= threshold) return x % n;
    }
  }

 private:
  std::uint64_t state_;
};

template <class T>
void fisher_yates_shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng.uniform_index(i);
    std::swap(v[i - 1], v[j]);
  }
}

// Draws an index proportional to exp(logw[i]) with max shift.
inline std::size_t sample_log_categorical(const std::vector<double>& logw, Rng& rng) {
  double hi = kNegInf;
  for (double x : logw) hi = std::max(hi, x);
  if (hi == kNegInf) throw std::runtime_error("sample_log_categorical: all weights are zero");
  double total = 0.0;
  for (double x : logw) total += std::exp(x - hi);
  double target = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    double wi = std::exp(logw[i] - hi);
    if (wi > 0) last_positive = i;
    acc += wi;
    if (target < acc) return i;
  }
  return last_positive;  // numerical fallthrough
}

}  // namespace morsel
