#pragma once

#include <cstdint>

namespace entdyn {

/// Stateless counter-based generator. Every draw is a pure function of
/// (seed, stream, counter), so results do not depend on evaluation order or
/// thread count. Mixing uses the SplitMix64 finaliser.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const noexcept;

  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t stream, std::uint64_t counter) const noexcept;

  /// Standard normal via Box-Muller on two consecutive sub-counters.
  double normal(std::uint64_t stream, std::uint64_t counter) const noexcept;

 private:
  std::uint64_t seed_;
};

/// Sequential stream on top of CounterRng for non-parallel sampling loops.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) noexcept : rng_(seed), stream_(stream) {}
  double uniform() noexcept { return rng_.uniform(stream_, counter_++); }
  double normal() noexcept { return rng_.normal(stream_, counter_++); }

 private:
  CounterRng rng_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace entdyn
