#include "sketchls/estimators.hpp"

#include "sketchls/error.hpp"

#include <string>

namespace sketchls {

namespace {

void check_xy(const Matrix& x, const Vector& y, const char* who) {
  if (x.rows() != y.size())
    throw_invalid(std::string(who) + ": X has " + std::to_string(x.rows()) +
                  " rows but Y has length " + std::to_string(y.size()));
  require_finite(x, who);
  require_finite(y, who);
}

FitResult finish(const Matrix& x, const Vector& y, Vector beta, Index rank) {
  FitResult fit;
  fit.residual_norm_sq = (y - x * beta).squaredNorm();
  fit.beta_hat = std::move(beta);
  fit.rank_used = rank;
  return fit;
}

} // namespace

FitResult ols_solve(const Matrix& x, const Vector& y) {
  check_xy(x, y, "ols_solve");
  if (x.rows() < x.cols()) throw_invalid("ols_solve: requires rows >= cols");
  const ThinSvd svd = thin_svd(x);
  Vector beta = svd.v * (svd.u.transpose() * y).cwiseQuotient(svd.singular_values);
  return finish(x, y, std::move(beta), svd.rank);
}

FitResult sketched_solve(const SketchDraw& draw, const Matrix& x,
                         const Vector& y) {
  check_xy(x, y, "sketched_solve");
  if (draw.n != x.rows()) throw_invalid("sketched_solve: sketch/data size mismatch");
  const Matrix sx = apply_sketch(draw, x);
  const Vector sy = apply_sketch(draw, Matrix(y)).col(0);
  const ThinSvd svd = thin_svd(sx);
  Vector beta = Vector::Zero(x.cols());
  if (svd.rank > 0)
    beta = svd.v * (svd.u.transpose() * sy).cwiseQuotient(svd.singular_values);
  return finish(x, y, std::move(beta), svd.rank);
}

FitResult partial_sketch_solve(const SketchDraw& draw, const Matrix& x,
                               const Vector& y) {
  check_xy(x, y, "partial_sketch_solve");
  if (draw.n != x.rows())
    throw_invalid("partial_sketch_solve: sketch/data size mismatch");
  const Matrix sx = apply_sketch(draw, x);
  const Vector xty = x.transpose() * y;
  // ((SX)^T SX)^+ = V diag(1/s^2) V^T from the thin SVD of SX
  const ThinSvd svd = thin_svd(sx);
  Vector beta = Vector::Zero(x.cols());
  if (svd.rank > 0) {
    const Vector inv_sq = svd.singular_values.array().square().inverse();
    beta = svd.v * inv_sq.asDiagonal() * (svd.v.transpose() * xty);
  }
  return finish(x, y, std::move(beta), svd.rank);
}

} // namespace sketchls
