#ifndef SKETCHLS_DATAGEN_HPP
#define SKETCHLS_DATAGEN_HPP

#include "sketchls/linalg.hpp"
#include "sketchls/rng.hpp"

#include <cstdint>
#include <limits>
#include <optional>

namespace sketchls {

enum class BetaChoice { ones, unit_random, supplied };

struct SyntheticSpec {
  Index n = 1024;
  Index p = 50;
  /// Degrees of freedom of the multivariate t rows; +infinity gives
  /// Gaussian rows.
  double nu = 10.0;
  double ar_rho = 0.5;
  BetaChoice beta_choice = BetaChoice::ones;
  std::optional<Vector> beta_supplied;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LinearModelInstance {
  Matrix x;
  Vector beta_true;
};

/// Sigma_ab = rho^|a-b|.
Matrix ar_covariance(Index p, double rho);

/// Rows X_i = Z_i / sqrt(W_i / nu), Z_i ~ N(0, Sigma), W_i ~ chi2(nu).
/// Redraws from a fresh child stream (at most 8 attempts) if X is not of
/// full column rank.
LinearModelInstance generate_design(const SyntheticSpec& spec, RngStream& rng);

/// Y = X beta + noise_scale * eps with eps i.i.d. standard normal.
/// noise_scale = 0 yields Y in the column space of X.
Vector generate_response(const Matrix& x, const Vector& beta_true,
                         RngStream& rng, double noise_scale = 1.0);

struct LeverageProfile {
  Vector sorted_scores; // descending
  Vector cumulative;
};

LeverageProfile leverage_profile(const Matrix& x);

} // namespace sketchls

#endif
