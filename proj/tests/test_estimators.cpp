#include "helpers.hpp"

#include "sketchls/estimators.hpp"
#include "sketchls/sketch.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace sketchls;
using testing::error_code;
using testing::max_abs;
using testing::random_matrix;
using testing::random_vector;

TEST_CASE("OLS: Y in the column space gives zero residual") {
  const Matrix x = random_matrix(20, 3, 1);
  Vector beta(3);
  beta << 1, -2, 0.5;
  const auto fit = ols_solve(x, x * beta);
  CHECK(fit.residual_norm_sq < 1e-20);
  CHECK(max_abs(fit.beta_hat - beta) < 1e-12);
  CHECK(fit.rank_used == 3);
}

TEST_CASE("OLS: square identity returns Y") {
  const Vector y = random_vector(4, 2);
  CHECK(max_abs(ols_solve(Matrix::Identity(4, 4), y).beta_hat - y) < 1e-15);
}

TEST_CASE("OLS matches normal equations oracle") {
  const Matrix x = random_matrix(64, 4, 3);
  const Vector y = random_vector(64, 4);
  const Vector oracle = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  const auto fit = ols_solve(x, y);
  CHECK(max_abs(fit.beta_hat - oracle) < 1e-10);
  CHECK(fit.residual_norm_sq == doctest::Approx((y - x * oracle).squaredNorm()).epsilon(1e-10));
}

TEST_CASE("OLS is invariant to joint row permutation") {
  const Matrix x = random_matrix(30, 3, 5);
  const Vector y = random_vector(30, 6);
  std::vector<int> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::rotate(perm.begin(), perm.begin() + 7, perm.end());
  Matrix xp(30, 3);
  Vector yp(30);
  for (int i = 0; i < 30; ++i) {
    xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    yp(i) = y(perm[static_cast<std::size_t>(i)]);
  }
  CHECK(max_abs(ols_solve(x, y).beta_hat - ols_solve(xp, yp).beta_hat) < 1e-12);
}

TEST_CASE("OLS dimension mismatch") {
  CHECK(error_code([] { ols_solve(Matrix::Identity(3, 2), Vector::Ones(4)); }) ==
        ErrorCode::invalid_input);
}

TEST_CASE("sketched solve with identity equals OLS") {
  const Matrix x = random_matrix(16, 3, 7);
  const Vector y = random_vector(16, 8);
  const auto draw = identity_sketch(16);
  CHECK(max_abs(sketched_solve(draw, x, y).beta_hat - ols_solve(x, y).beta_hat) < 1e-12);
  CHECK(max_abs(partial_sketch_solve(draw, x, y).beta_hat - ols_solve(x, y).beta_hat) < 1e-10);
}

TEST_CASE("sketched solve matches materialized-S oracle") {
  const Matrix x = random_matrix(40, 4, 9);
  const Vector y = random_vector(40, 10);
  const Vector lev = leverage_scores(x);
  for (auto tag : {SketchTag::gaussian_projection, SketchTag::rademacher_projection,
                   SketchTag::hadamard, SketchTag::leverage_rescaled}) {
    RngStream rng(11, static_cast<std::uint64_t>(tag));
    const auto draw = draw_sketch(SketchKind::of(tag), lev, 12, 40, rng);
    const Matrix s = materialize(draw);
    const Matrix sx = s * x;
    const Vector oracle = sx.completeOrthogonalDecomposition().pseudoInverse() * (s * y);
    const auto fit = sketched_solve(draw, x, y);
    CHECK_MESSAGE(max_abs(fit.beta_hat - oracle) < 1e-10, to_string(tag));
    // sketched normal equations hold
    const Vector sy = s * y;
    CHECK((sx.transpose() * (sx * fit.beta_hat - sy)).norm() <= 1e-8 * sx.norm() * sy.norm());
  }
}

TEST_CASE("sketched solve reports rank loss") {
  const Matrix x = random_matrix(10, 3, 12);
  Vector probs = Vector::Zero(10);
  probs(0) = 1.0;
  RngStream rng(13, 0);
  const auto draw = draw_sampling_sketch(probs, 5, true, rng);
  const auto fit = sketched_solve(draw, x, random_vector(10, 14));
  CHECK(fit.rank_used == 1);
}

TEST_CASE("partial sketch with orthonormal X matches materialized oracle") {
  const Matrix x = thin_svd(random_matrix(32, 3, 15)).u;
  const Vector y = random_vector(32, 16);
  RngStream rng(17, 0);
  const auto draw = draw_dense_projection(ProjectionKind::gaussian, 10, 32, rng);
  const Matrix sx = materialize(draw) * x;
  const Vector oracle = (sx.transpose() * sx).inverse() * (x.transpose() * y);
  CHECK(max_abs(partial_sketch_solve(draw, x, y).beta_hat - oracle) < 1e-10);
}

TEST_CASE("sketched solve dimension mismatch") {
  const auto draw = identity_sketch(5);
  CHECK(error_code([&] { sketched_solve(draw, Matrix::Ones(6, 2), Vector::Ones(6)); }) ==
        ErrorCode::invalid_input);
  CHECK(error_code([&] { sketched_solve(draw, Matrix::Ones(5, 2), Vector::Ones(4)); }) ==
        ErrorCode::invalid_input);
}
