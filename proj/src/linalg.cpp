#include "sketchls/linalg.hpp"

#include "sketchls/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sketchls {

double default_rank_tol(Index rows, Index cols) {
  return static_cast<double>(std::max<Index>({rows, cols, 1})) *
         std::numeric_limits<double>::epsilon();
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite())
    throw_invalid(std::string(what) + ": non-finite entry");
}

ThinSvd thin_svd(const Matrix& m, std::optional<double> rank_tol) {
  require_finite(m, "thin_svd");
  const double tol = rank_tol.value_or(default_rank_tol(m.rows(), m.cols()));
  if (!(tol >= 0.0)) throw_invalid("thin_svd: rank_tol must be >= 0");

  ThinSvd out;
  if (m.size() == 0) {
    out.u.resize(m.rows(), 0);
    out.v.resize(m.cols(), 0);
    return out;
  }

  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw_numeric("thin_svd: factorization of " + std::to_string(m.rows()) +
                  "x" + std::to_string(m.cols()) + " matrix did not converge");

  const Vector& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  if (!std::isfinite(smax))
    throw_numeric("thin_svd: non-finite singular value");

  Index k = 0;
  while (k < s.size() && smax > 0.0 && s(k) > tol * smax) ++k;

  out.rank = k;
  out.singular_values = s.head(k);
  out.u = svd.matrixU().leftCols(k);
  out.v = svd.matrixV().leftCols(k);
  return out;
}

Matrix pinv(const ThinSvd& svd) {
  const Vector inv = svd.singular_values.cwiseInverse();
  return svd.v * inv.asDiagonal() * svd.u.transpose();
}

Matrix pinv(const Matrix& a, std::optional<double> rank_tol) {
  return pinv(thin_svd(a, rank_tol));
}

Vector pinv_solve(const Matrix& a, const Vector& b,
                  std::optional<double> rank_tol) {
  if (a.rows() != b.size())
    throw_invalid("pinv_solve: A has " + std::to_string(a.rows()) +
                  " rows but b has length " + std::to_string(b.size()));
  require_finite(b, "pinv_solve");
  const ThinSvd svd = thin_svd(a, rank_tol);
  if (svd.rank == 0) return Vector::Zero(a.cols());
  const Vector coeffs =
      (svd.u.transpose() * b).cwiseQuotient(svd.singular_values);
  return svd.v * coeffs;
}

Vector leverage_scores_from_basis(const Matrix& u) {
  return u.rowwise().squaredNorm();
}

Vector leverage_scores(const Matrix& x) {
  return leverage_scores_from_basis(thin_svd(x).u);
}

double cross_leverage(const Matrix& x, Index i, Index j) {
  if (i < 0 || j < 0 || i >= x.rows() || j >= x.rows())
    throw_invalid("cross_leverage: index out of range");
  const Matrix u = thin_svd(x).u;
  return u.row(i).dot(u.row(j));
}

bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

Index next_power_of_two(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fwht_inplace(std::span<double> v) {
  const auto n = static_cast<Index>(v.size());
  if (!is_power_of_two(n))
    throw_invalid("fwht: length " + std::to_string(n) +
                  " is not a power of two");
  for (Index half = 1; half < n; half <<= 1) {
    for (Index block = 0; block < n; block += 2 * half) {
      for (Index k = block; k < block + half; ++k) {
        const double a = v[k];
        const double b = v[k + half];
        v[k] = a + b;
        v[k + half] = a - b;
      }
    }
  }
}

void fwht_columns(Matrix& m) {
  // column-major storage: each column is contiguous
  for (Index c = 0; c < m.cols(); ++c)
    fwht_inplace(std::span<double>(m.col(c).data(),
                                   static_cast<std::size_t>(m.rows())));
}

Vector fwht(const Vector& v) {
  Vector out = v;
  fwht_inplace(std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  // the smaller Gram matrix is cheaper and exact enough for norms
  const Matrix g = m.rows() <= m.cols() ? Matrix(m * m.transpose())
                                        : Matrix(m.transpose() * m);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw_numeric("spectral_norm: eigen solver did not converge");
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

} // namespace sketchls
