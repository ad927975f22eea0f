#include "entdyn/rng.hpp"

#include <cmath>
#include <numbers>

namespace entdyn {

namespace {

constexpr std::uint64_t splitmix(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double to_open_unit(std::uint64_t b) noexcept {
  // 53 random bits, shifted by half an ulp so 0 is never produced.
  return (static_cast<double>(b >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::uint64_t CounterRng::bits(std::uint64_t stream, std::uint64_t counter) const noexcept {
  std::uint64_t h = splitmix(seed_);
  h = splitmix(h ^ stream);
  h = splitmix(h ^ (counter * 0xd1342543de82ef95ULL));
  return h;
}

double CounterRng::uniform(std::uint64_t stream, std::uint64_t counter) const noexcept {
  return to_open_unit(bits(stream, counter));
}

double CounterRng::normal(std::uint64_t stream, std::uint64_t counter) const noexcept {
  const double u1 = to_open_unit(bits(stream, 2 * counter));
  const double u2 = to_open_unit(bits(stream, 2 * counter + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace entdyn
