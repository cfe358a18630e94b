#ifndef SKETCHLS_RNG_HPP
#define SKETCHLS_RNG_HPP

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace sketchls {

std::uint64_t splitmix64(std::uint64_t x);

/// Order-sensitive hash of a list of 64-bit words, used to derive
/// per-cell and per-replication seeds.
std::uint64_t hash_words(std::span<const std::uint64_t> words);

/// Reproducible random stream. Identical (seed, stream_id) pairs produce
/// identical sequences on every platform: the engine is mt19937_64 (fully
/// specified by the standard) and all variate transforms are implemented
/// here rather than taken from <random> distributions.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Independent child stream (same seed, mixed stream id).
  RngStream derive(std::uint64_t child) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  double normal();
  /// +1 or -1 with equal probability.
  double rademacher();
  /// Gamma(shape, 1), Marsaglia-Tsang.
  double gamma(double shape);
  double chi_square(double dof);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Inverse-CDF sampler over a fixed discrete distribution. Entries with
/// zero probability are never returned.
class CategoricalSampler {
public:
  explicit CategoricalSampler(std::span<const double> probs);
  std::size_t operator()(RngStream& rng) const;

private:
  std::vector<double> cdf_;
};

} // namespace sketchls

#endif
