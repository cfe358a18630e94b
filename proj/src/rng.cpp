#include "sketchls/rng.hpp"

#include "sketchls/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sketchls {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_words(std::span<const std::uint64_t> words) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t w : words) h = splitmix64(h ^ splitmix64(w));
  return h;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id),
      engine_(splitmix64(seed ^ splitmix64(stream_id ^ 0x5851f42d4c957f2dULL))) {}

RngStream RngStream::derive(std::uint64_t child) const {
  const std::uint64_t words[] = {stream_id_, child};
  return RngStream(seed_, hash_words(words));
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() {
  return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; both outputs used
  const double u1 = uniform_open();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double RngStream::rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

double RngStream::gamma(double shape) {
  if (!(shape > 0.0)) throw_invalid("gamma: shape must be positive");
  if (shape < 1.0) {
    // boost: Gamma(a) = Gamma(a + 1) * U^(1/a)
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform_open(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RngStream::chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw_invalid("below: empty range");
  // rejection to avoid modulo bias
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

CategoricalSampler::CategoricalSampler(std::span<const double> probs) {
  if (probs.empty()) throw_invalid("categorical: empty distribution");
  cdf_.resize(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0) || !std::isfinite(probs[i]))
      throw_invalid("categorical: probabilities must be finite and >= 0");
    acc += probs[i];
    cdf_[i] = acc;
  }
  if (!(acc > 0.0)) throw_invalid("categorical: zero total mass");
}

std::size_t CategoricalSampler::operator()(RngStream& rng) const {
  const double target = rng.uniform() * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  if (it == cdf_.end()) {
    // target rounded up to the total; take the last positive-mass entry
    it = std::lower_bound(cdf_.begin(), cdf_.end(), cdf_.back());
  }
  return static_cast<std::size_t>(it - cdf_.begin());
}

} // namespace sketchls
