#pragma once

#include <cstdint>

namespace lqmfg {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Stateless key of the stream for (seed, a, b), e.g. (seed, player,
/// replication).
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

/// Counter-based generator: the n-th output is mix64(key + n·γ).
class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal by the Box–Muller transform.
  double normal();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lqmfg
