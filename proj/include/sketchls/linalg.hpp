#ifndef SKETCHLS_LINALG_HPP
#define SKETCHLS_LINALG_HPP

#include <Eigen/Dense>

#include <optional>
#include <span>

namespace sketchls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thin singular value decomposition M = U diag(s) V^T truncated to the
/// numerical rank. `u` is rows x rank, `v` is cols x rank.
struct ThinSvd {
  Matrix u;
  Vector singular_values;
  Matrix v;
  Index rank = 0;
};

/// Relative rank tolerance used when none is supplied:
/// max(rows, cols) * machine epsilon. Singular values at or below
/// tol * sigma_max are treated as zero.
double default_rank_tol(Index rows, Index cols);

bool all_finite(const Matrix& m);
void require_finite(const Matrix& m, const char* what);

/// Throws invalid-input on non-finite entries, numeric on factorization
/// failure. A zero matrix has rank 0 and empty factors.
ThinSvd thin_svd(const Matrix& m, std::optional<double> rank_tol = {});

/// Minimum-norm least-squares solution A^+ b.
Vector pinv_solve(const Matrix& a, const Vector& b,
                  std::optional<double> rank_tol = {});

/// Moore-Penrose pseudo-inverse assembled from a thin SVD.
Matrix pinv(const ThinSvd& svd);
Matrix pinv(const Matrix& a, std::optional<double> rank_tol = {});

/// Diagonal of the hat matrix, computed as squared row norms of the
/// rank-k left singular factor.
Vector leverage_scores(const Matrix& x);
Vector leverage_scores_from_basis(const Matrix& u);

/// (U U^T)_{ij}.
double cross_leverage(const Matrix& x, Index i, Index j);

bool is_power_of_two(Index n);
Index next_power_of_two(Index n);

/// In-place unnormalized Walsh-Hadamard transform (entries of H are +-1).
/// Length must be a power of two.
void fwht_inplace(std::span<double> v);

/// Same transform applied to every column of `m`.
void fwht_columns(Matrix& m);

Vector fwht(const Vector& v);

/// Largest singular value; 0 for empty matrices.
double spectral_norm(const Matrix& m);

} // namespace sketchls

#endif
