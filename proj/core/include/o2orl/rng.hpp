#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace o2orl {

// splitmix64 finalizer, used to derive independent seed streams from one
// master seed. Every run owns disjoint streams (net init, training, env
// episodes, evaluation) so that e.g. evaluation never perturbs training.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

// Deterministic random source. All sampling goes through this class rather
// than std::*_distribution so that draws are identical across platforms,
// not just within one build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform index in [0, n). Rejection sampling, no modulo bias.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t threshold = (~static_cast<std::uint64_t>(n) + 1) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return static_cast<std::size_t>(r % n);
    }
  }

  // One Gaussian draw via Box-Muller; the sine partner is discarded so the
  // generator state advances by exactly two words per call.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double z =
        std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + stddev * z;
  }

 private:
  std::mt19937_64 gen_;
};

// Stream tags for mix_seed. Kept in one place so runs stay reproducible when
// new streams are added.
namespace seed_stream {
inline constexpr std::uint64_t kNetInit = 0x01;
inline constexpr std::uint64_t kTrain = 0x02;
inline constexpr std::uint64_t kEnvEpisodes = 0x03;
inline constexpr std::uint64_t kEval = 0x04;
inline constexpr std::uint64_t kDemos = 0x05;
}  // namespace seed_stream

}  // namespace o2orl
