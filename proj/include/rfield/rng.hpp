#pragma once
// Counter-based random streams.
//
// Every draw is a pure function of (key, counter), where the key is derived
// from the master seed, the replicate index and a cell or tile index. Fields
// sampled in parallel therefore reproduce bit-for-bit regardless of the order
// in which cells are visited.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rfield {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a sequence of words into one stream key.
constexpr std::uint64_t derive_key(std::uint64_t seed) noexcept { return mix64(seed); }

template <class... Rest>
constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t next, Rest... rest) noexcept {
  return derive_key(mix64(seed ^ mix64(next + 0x632be59bd9b4e019ULL)), static_cast<std::uint64_t>(rest)...);
}

/// Maps a 64-bit word to a uniform double in the open interval (0, 1).
/// The top 53 bits are used, so the top bit of the word decides u < 1/2.
constexpr double word_to_unit(std::uint64_t w) noexcept {
  return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
}

class CounterStream {
 public:
  constexpr explicit CounterStream(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t word_at(std::uint64_t counter) const noexcept {
    return mix64(key_ + (counter + 1) * 0x9e3779b97f4a7c15ULL);
  }
  std::uint64_t next_word() noexcept { return word_at(counter_++); }
  double next_unit() noexcept { return word_to_unit(next_word()); }

  /// Standard normal via Box-Muller (one variate per two uniforms).
  double next_normal() noexcept {
    const double u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Domain tags keep streams of different sampling stages disjoint.
namespace stream_tag {
inline constexpr std::uint64_t cell = 0x11;
inline constexpr std::uint64_t walsh_tile = 0x22;
inline constexpr std::uint64_t gaussian_noise = 0x33;
inline constexpr std::uint64_t block = 0x44;
}  // namespace stream_tag

}  // namespace rfield
