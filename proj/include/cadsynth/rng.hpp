#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace cadsynth {

// Seedable, splittable random stream. Every sampled quantity in the pipeline
// draws from a stream keyed by (seed, indices..., purpose tag), so content
// never depends on call order across streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  static constexpr std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys,
                                        std::string_view tag) {
    std::uint64_t h = mix(seed);
    for (std::uint64_t k : keys) h = mix(h ^ mix(k + 0x632be59bd9b4e019ULL));
    return mix(h ^ hash_tag(tag));
  }

  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys, std::string_view tag) {
    return Rng(derive(seed, keys, tag));
  }

  // Child stream; consumes one draw from this stream.
  Rng split(std::string_view tag) { return Rng(derive(next_u64(), {}, tag)); }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return lo + static_cast<std::int64_t>(r % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cadsynth
