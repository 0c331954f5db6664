#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bicnet {

// Tags separating the per-block random streams of one sweep.
enum class StreamKind : std::uint64_t {
  chain = 1,
  init = 2,
  sigma2 = 3,
  sv = 4,
  loading = 5,
  factor = 6,
  group_inclusion = 7,
  regression = 8,
  simulate = 9,
  scale = 10,
  label = 11,
};

// SplitMix64 finalizer folded over the tags. Used to derive independent,
// reproducible stream seeds from (master seed, sweep, block coordinates).
std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    return Rng(mix_seed(seed, tags));
  }

  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  // Open interval (0, 1).
  double uniform();
  double gamma(double shape, double rate);
  double inv_gamma(double shape, double rate) { return 1.0 / gamma(shape, rate); }
  double beta(double a, double b);
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t next() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace bicnet
