#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace deskmt {

// Deterministic RNG used for every random choice in the pipeline.
//
// std::mt19937_64 itself is fully specified by the standard, but the
// std::*_distribution adapters are not, so all draws below are derived from
// raw engine output only. Identical seeds give identical streams on every
// platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n) via rejection sampling. n must be > 0.
  uint64_t below(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // In-place Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // First n entries of a seeded permutation of [0, size): a sample without
  // replacement in draw order.
  std::vector<size_t> sample_indices(size_t size, size_t n) {
    std::vector<size_t> idx(size);
    for (size_t i = 0; i < size; ++i) idx[i] = i;
    for (size_t i = 0; i < n && i + 1 < size; ++i) {
      const size_t j = i + static_cast<size_t>(below(size - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    return idx;
  }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent child seed from a base seed and a purpose label,
// so that e.g. batch shuffling and dropout never share a stream. FNV-1a.
inline uint64_t derive_seed(uint64_t seed, std::string_view purpose) {
  uint64_t h = 1469598103934665603ull;
  const auto mix = [&h](uint8_t byte) {
    h ^= byte;
    h *= 1099511628211ull;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<uint8_t>(seed >> (8 * i)));
  for (char c : purpose) mix(static_cast<uint8_t>(c));
  return h;
}

}  // namespace deskmt
