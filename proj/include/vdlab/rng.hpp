#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace vdlab {

// All randomness in the pipeline flows through these helpers. std::mt19937_64
// has a sequence pinned by the standard, and the bounded-draw / shuffle code
// below is our own, so identical seeds give identical results on every
// platform and standard library. std::shuffle and the std distributions are
// deliberately not used anywhere.

// Stable 64-bit FNV-1a. Also used for feature hashing.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Derives an independent stream seed from a root seed, a purpose string and a
// numeric key. Adding a new purpose never perturbs draws made under existing
// ones.
std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose,
                          std::uint64_t key = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, n) by rejection; n = 0 is invalid.
  std::uint64_t below(std::uint64_t n);

  // Fisher-Yates, back to front.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(below(v.size()))];
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vdlab
