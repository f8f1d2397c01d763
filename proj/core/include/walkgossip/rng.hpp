#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace wg {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a over the bytes of a stream name.
constexpr std::uint64_t hash_name(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives the seed of stream (name, index) from a root seed.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view name,
                                    std::uint64_t index = 0) noexcept {
  return mix64(mix64(root ^ hash_name(name)) + mix64(index + 0x632be59bd9b4e019ULL));
}

/// A named random stream. Every source of randomness in a run (walk moves,
/// minibatch draws, clock delays, data synthesis) owns one of these, so
/// components can be reproduced independently of each other.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() : RngStream(0, "default") {}
  RngStream(std::uint64_t root_seed, std::string_view name, std::uint64_t index = 0)
      : engine_(derive_seed(root_seed, name, index)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  /// Exponential with the given mean; always strictly positive.
  double exponential(double mean);

  double normal(double mean = 0.0, double stddev = 1.0);

  /// Gamma(shape, 1).
  double gamma(double shape);

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace wg
