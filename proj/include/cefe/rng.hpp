#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace cefe {

std::uint64_t splitmix64_next(std::uint64_t& state);

// Order-sensitive mix of two 64-bit values; used to derive per-item streams.
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);

std::uint64_t fnv1a64(std::string_view bytes);

// Deterministic generator. Every sampling method is spelled out here instead
// of going through <random> distributions, whose outputs are
// implementation-defined; results are identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, bound); rejection sampling, no modulo bias. bound > 0.
  std::uint64_t next_below(std::uint64_t bound);

  std::size_t pick_index(std::size_t size) {
    return static_cast<std::size_t>(next_below(static_cast<std::uint64_t>(size)));
  }

  bool bernoulli(double p) { return next_unit() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = pick_index(i + 1);
      using std::swap;
      swap(v[i], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace cefe
