#pragma once

#include <cstdint>
#include <string_view>

namespace gldgcn {

/// Counter-based random stream: draw k is a pure function of (seed, k).
///
/// Identical seeds and identical draw sequences give identical outputs on
/// every platform, which std:: distributions do not guarantee.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, bound); bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent sub-seed from a parent seed and a fixed label, so
/// that adding a new consumer never shifts another consumer's stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

}  // namespace gldgcn
