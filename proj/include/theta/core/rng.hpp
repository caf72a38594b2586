#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace theta {

/// Seeded 64-bit generator with platform-independent real/integer mappings.
///
/// std::uniform_*_distribution is implementation-defined, so the mappings
/// from raw engine output are done here to keep golden vectors portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Uniform integer on [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent sub-stream seed from a root seed, a stream name and
/// optional indices (splitmix64 over an FNV-1a digest of the name).
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                          std::initializer_list<std::uint64_t> indices = {});

inline Rng derive_rng(std::uint64_t root, std::string_view stream,
                      std::initializer_list<std::uint64_t> indices = {}) {
  return Rng(derive_seed(root, stream, indices));
}

}  // namespace theta
