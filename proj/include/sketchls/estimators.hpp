#ifndef SKETCHLS_ESTIMATORS_HPP
#define SKETCHLS_ESTIMATORS_HPP

#include "sketchls/linalg.hpp"
#include "sketchls/sketch.hpp"

namespace sketchls {

struct FitResult {
  Vector beta_hat;
  Index rank_used = 0;
  /// ||Y - X beta_hat||^2 on the full, unsketched data.
  double residual_norm_sq = 0.0;
};

/// beta = X^+ Y.
FitResult ols_solve(const Matrix& x, const Vector& y);

/// beta = (SX)^+ (SY). rank_used is rank(SX).
FitResult sketched_solve(const SketchDraw& draw, const Matrix& x,
                         const Vector& y);

/// beta = ((SX)^T SX)^+ X^T Y: sketched Gram matrix, exact cross term.
FitResult partial_sketch_solve(const SketchDraw& draw, const Matrix& x,
                               const Vector& y);

} // namespace sketchls

#endif
