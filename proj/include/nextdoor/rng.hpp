#pragma once

#include <cstdint>
#include <random>

namespace nextdoor {

// Counter-based generator (splitmix64). Seeding is O(1), so every logical
// task (fold shuffle, noise draw h, bootstrap replicate b, ...) gets its own
// stream and results never depend on scheduling or worker count.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }
  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t z) { return SplitMix64(z)(); }

// Stable substream derivation: same (seed, tag, i0, i1) -> same stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                                 std::uint64_t i0 = 0, std::uint64_t i1 = 0) {
  std::uint64_t s = mix64(seed ^ mix64(tag));
  s = mix64(s ^ mix64(i0 ^ 0x632be59bd9b4e019ULL));
  return mix64(s ^ mix64(i1 ^ 0x9e6c63d0876a9a43ULL));
}

// Substream tags. Values are part of the reproducibility contract: changing
// them changes every seeded result.
enum class Stream : std::uint64_t {
  folds = 1,
  base_debias = 2,
  debias = 3,
  bootstrap = 4,
  frequency = 5,
  post_selection = 6,
  reference = 7,
  simulation = 8,
  noise_draw = 9,
  replicate = 10,
  degeneracy = 11,
};

inline std::uint64_t derive_seed(std::uint64_t seed, Stream tag,
                                 std::uint64_t i0 = 0, std::uint64_t i1 = 0) {
  return derive_seed(seed, static_cast<std::uint64_t>(tag), i0, i1);
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}
  RngStream(std::uint64_t seed, Stream tag, std::uint64_t i0 = 0,
            std::uint64_t i1 = 0)
      : eng_(derive_seed(seed, tag, i0, i1)) {}

  double normal() { return normal_(eng_); }
  double uniform() { return uniform_(eng_); }
  std::uint64_t bits() { return eng_(); }

  // Uniform index in [0, k). Modulo bias is ~k/2^64, irrelevant here.
  std::size_t index(std::size_t k) {
    return static_cast<std::size_t>(eng_() % static_cast<std::uint64_t>(k));
  }

 private:
  SplitMix64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace nextdoor
