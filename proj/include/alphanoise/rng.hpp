#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace alphanoise {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stream id for the `index`-th consumer of `purpose` under `base`.
constexpr std::uint64_t derive_stream_id(std::uint64_t base, std::string_view purpose,
                                         std::uint64_t index) noexcept {
  return mix64(mix64(base ^ fnv1a(purpose)) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// A single-owner random stream keyed by (seed, stream_id).
///
/// The pair fully determines the sequence; distinct stream ids are decorrelated
/// through a SplitMix64 hash before seeding a 64-bit Mersenne Twister.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id), engine_(mix64(mix64(seed) ^ stream_id)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Independent stream for the index-th child of this stream.
  RngStream child(std::string_view purpose, std::uint64_t index) const {
    return RngStream(seed_, derive_stream_id(stream_id_, purpose, index));
  }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Exponential(1) by inversion.
  double exponential() { return -std::log(uniform_open()); }

  /// Uniform integer in [0, n) by rejection; n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = max() - (max() % n + 1) % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r > limit);
    return r % n;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

}  // namespace alphanoise
