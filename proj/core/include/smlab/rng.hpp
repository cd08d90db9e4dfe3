#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace smlab {

/// Combines seed components into one 64-bit seed (splitmix64 finalizer per
/// component). Used to derive independent stream seeds from a master seed.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

/// Deterministic random source. std::mt19937_64 is fully specified by the
/// standard and the distribution code below is our own, so identical seeds
/// give identical streams on every platform and compiler.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform_real(double lo, double hi) {
    return lo + (hi - lo) * uniform();
  }

  /// Uniform integer in [0, n). Requires n >= 1.
  int uniform_int(int n) {
    return static_cast<int>(gen_() % static_cast<std::uint64_t>(n));
  }

  /// Normal draw via Box-Muller (no cached spare, so the draw count per call
  /// is fixed and replay stays exact).
  double normal(double mean, double stddev);

  /// Fisher-Yates shuffle driven by this generator.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      int j = uniform_int(i + 1);
      std::swap(v[i], v[j]);
    }
  }

  bool operator==(const Rng& other) const { return gen_ == other.gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace smlab
