#include "vdlab/rng.hpp"

#include <stdexcept>
#include <string>

namespace vdlab {

namespace {

// splitmix64 finisher, mixes the combined words into a well-spread seed.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose,
                          std::uint64_t key) {
  std::uint64_t h = fnv1a64(purpose);
  h = mix64(h ^ mix64(root));
  h = mix64(h ^ mix64(key));
  return h;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::logic_error("Rng::below(0)");
  // Discard the low 2^64 mod n values so the remainder is unbiased.
  const std::uint64_t threshold = (0 - n) % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x < threshold);
  return x % n;
}

}  // namespace vdlab
