#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace omodl {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char ch : s) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Child seed for a named stream; distinct (name, index) pairs give independent seeds.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ fnv1a(name)) + splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Counter-based generator: the n-th draw is a pure function of (key, n),
/// so the full state is two integers and results do not depend on the
/// standard library's distribution implementations.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0) : key_(splitmix64(seed)), seed_(seed), counter_(counter) {}

  std::uint64_t next_u64() {
    std::uint64_t const c = counter_++;
    return splitmix64(key_ ^ splitmix64(c * 0xD1B54A32D192ED03ULL + 1));
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

  /// Standard normal via Box-Muller, one value per call (two uniforms).
  double normal() {
    double u1 = uniform();
    double const u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t seed_;
  std::uint64_t counter_;
};

} // namespace omodl
