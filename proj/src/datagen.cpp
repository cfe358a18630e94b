#include "sketchls/datagen.hpp"

#include "sketchls/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace sketchls {

namespace {
constexpr int kMaxDesignAttempts = 8;
}

void SyntheticSpec::validate() const {
  if (p < 1 || n < p) throw_invalid("synthetic spec: requires n >= p >= 1");
  if (!(nu > 0.0)) throw_invalid("synthetic spec: nu must be positive");
  if (!(std::abs(ar_rho) < 1.0))
    throw_invalid("synthetic spec: |ar_rho| must be < 1");
  if (beta_choice == BetaChoice::supplied) {
    if (!beta_supplied || beta_supplied->size() != p)
      throw_invalid("synthetic spec: supplied beta must have length p");
    if (!beta_supplied->allFinite())
      throw_invalid("synthetic spec: supplied beta must be finite");
  }
}

Matrix ar_covariance(Index p, double rho) {
  Matrix sigma(p, p);
  for (Index a = 0; a < p; ++a)
    for (Index b = 0; b < p; ++b)
      sigma(a, b) = std::pow(rho, static_cast<double>(std::abs(a - b)));
  return sigma;
}

LinearModelInstance generate_design(const SyntheticSpec& spec, RngStream& rng) {
  spec.validate();
  const Matrix sigma = ar_covariance(spec.p, spec.ar_rho);
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw_numeric("generate_design: AR covariance is not positive definite");
  const Matrix chol = llt.matrixL();
  const bool gaussian = std::isinf(spec.nu);

  LinearModelInstance inst;
  for (int attempt = 0; attempt < kMaxDesignAttempts; ++attempt) {
    RngStream stream = attempt == 0 ? rng : rng.derive(static_cast<std::uint64_t>(attempt));
    Matrix g(spec.n, spec.p);
    Vector scale(spec.n);
    for (Index i = 0; i < spec.n; ++i) {
      for (Index j = 0; j < spec.p; ++j) g(i, j) = stream.normal();
      scale(i) = gaussian ? 1.0 : 1.0 / std::sqrt(stream.chi_square(spec.nu) / spec.nu);
    }
    // row i: scale_i * (L z_i)^T
    inst.x = scale.asDiagonal() * (g * chol.transpose());

    if (spec.beta_choice == BetaChoice::ones) {
      inst.beta_true = Vector::Ones(spec.p);
    } else if (spec.beta_choice == BetaChoice::supplied) {
      inst.beta_true = *spec.beta_supplied;
    } else {
      Vector b(spec.p);
      for (Index j = 0; j < spec.p; ++j) b(j) = stream.normal();
      inst.beta_true = b / b.norm();
    }

    if (inst.x.allFinite() && thin_svd(inst.x).rank == spec.p) {
      rng = stream;
      return inst;
    }
  }
  throw_numeric("generate_design: no full-rank design after " +
                std::to_string(kMaxDesignAttempts) + " attempts");
}

Vector generate_response(const Matrix& x, const Vector& beta_true,
                         RngStream& rng, double noise_scale) {
  if (x.cols() != beta_true.size())
    throw_invalid("generate_response: X has " + std::to_string(x.cols()) +
                  " columns but beta has length " + std::to_string(beta_true.size()));
  Vector y = x * beta_true;
  if (noise_scale != 0.0)
    for (Index i = 0; i < y.size(); ++i) y(i) += noise_scale * rng.normal();
  return y;
}

LeverageProfile leverage_profile(const Matrix& x) {
  const Vector lev = leverage_scores(x);
  std::vector<double> sorted(lev.data(), lev.data() + lev.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  LeverageProfile prof;
  prof.sorted_scores = Eigen::Map<const Vector>(sorted.data(), lev.size());
  prof.cumulative.resize(lev.size());
  double acc = 0.0;
  for (Index i = 0; i < lev.size(); ++i) {
    acc += prof.sorted_scores(i);
    prof.cumulative(i) = acc;
  }
  return prof;
}

} // namespace sketchls
