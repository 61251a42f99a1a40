#pragma once

#include <cstdint>
#include <random>

namespace amcnn {

using Rng = std::mt19937_64;

/// A position in a tree of seeds. Every consumer of randomness derives its
/// own child stream, so results never depend on the order in which
/// independent consumers run.
class SeedStream {
 public:
  explicit constexpr SeedStream(std::uint64_t seed) : seed_(seed) {}

  constexpr SeedStream child(std::uint64_t index) const {
    return SeedStream(mix(seed_ ^ mix(index + 0x9e3779b97f4a7c15ULL)));
  }
  constexpr std::uint64_t seed() const { return seed_; }
  Rng engine() const { return Rng(seed_); }

 private:
  // splitmix64 finalizer
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
};

/// Named substreams of the master run seed.
enum class Stream : std::uint64_t {
  embedding_init = 1,
  param_init = 2,
  shuffle = 3,
  dropout = 4,
  channel_mask = 5,
  data_split = 6,
};

inline SeedStream substream(std::uint64_t master_seed, Stream which) {
  return SeedStream(master_seed).child(static_cast<std::uint64_t>(which));
}

}  // namespace amcnn
