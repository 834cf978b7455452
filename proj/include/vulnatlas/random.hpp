#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace vulnatlas {

/// Mixes a master seed with a stream index (restart number, permutation
/// replicate, tract index). Streams are independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Seeded generator whose derived draws do not depend on the standard
/// library's distribution implementations, so sequences are identical
/// across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform integer on [0, bound). bound must be > 0.
  std::size_t index(std::size_t bound);
  double normal(double mean = 0.0, double sd = 1.0);

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace vulnatlas
