#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace orl {

/// Seeded pseudo-random stream. Two generators built from the same
/// (seed, stream) pair produce bit-identical sequences.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Independent generator sharing this seed, keyed by `child`.
  /// Does not advance this generator.
  Rng split(std::uint64_t child) const;

  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  double normal(double mean, double stddev);
  /// Uniform integer in [0, n). Requires n > 0.
  std::size_t index(std::size_t n);
  bool bernoulli(double p);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace orl
