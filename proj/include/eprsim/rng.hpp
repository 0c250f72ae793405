#pragma once

#include <cstdint>

namespace eprsim {

// splitmix64 (Steele/Lea/Flood splittable generator, Vigna's fixed-increment
// variant). Chosen because every draw is a pure function of the 64-bit state,
// which makes ensembles bit-reproducible across platforms; std::random
// distributions carry no such guarantee.
class SplitMix64 {
public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform double in [0, 1), 53 random bits
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
  std::uint64_t state_;
};

// Stream-splitting rule (part of the reproducibility contract): stream `id`
// of master seed `s` is a SplitMix64 seeded with the (id+1)-th output of a
// SplitMix64 seeded with `s`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id) {
  SplitMix64 root(seed);
  std::uint64_t s = 0;
  for (std::uint64_t n = 0; n <= stream_id; ++n) s = root.next();
  return s;
}

constexpr SplitMix64 substream(std::uint64_t seed, std::uint64_t stream_id) {
  return SplitMix64(derive_seed(seed, stream_id));
}

// Fixed stream ids used by the samplers.
namespace stream {
inline constexpr std::uint64_t settings = 0;  // setting-pair draws
inline constexpr std::uint64_t hidden = 1;    // hidden outcome-pair draws
// selection re-draws for context (k,l), k,l in {1,2}
constexpr std::uint64_t selection(int k, int l) {
  return 2 + static_cast<std::uint64_t>((k - 1) * 2 + (l - 1));
}
}  // namespace stream

}  // namespace eprsim
