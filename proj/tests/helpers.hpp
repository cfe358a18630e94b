#ifndef SKETCHLS_TEST_HELPERS_HPP
#define SKETCHLS_TEST_HELPERS_HPP

#include "sketchls/error.hpp"
#include "sketchls/linalg.hpp"
#include "sketchls/rng.hpp"

#include <Eigen/Eigenvalues>

#include <bit>
#include <optional>

namespace testing {

using sketchls::Index;
using sketchls::Matrix;
using sketchls::Vector;

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  sketchls::RngStream rng(seed, 0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

inline Vector random_vector(Index n, std::uint64_t seed) {
  return random_matrix(n, 1, seed).col(0);
}

// Dense hat matrix X (X^T X)^{-1} X^T via normal equations.
inline Matrix hat_matrix(const Matrix& x) {
  Matrix g = x.transpose() * x;
  return x * g.ldlt().solve(x.transpose());
}

// H_ij = (-1)^popcount(i & j), unnormalized.
inline Matrix dense_hadamard(Index n) {
  Matrix h(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      h(i, j) = (std::popcount(static_cast<unsigned long long>(i & j)) % 2) ? -1.0 : 1.0;
  return h;
}

// Error code thrown by f, or nullopt when it returns normally.
template <class F>
std::optional<sketchls::ErrorCode> error_code(F&& f) {
  try {
    f();
  } catch (const sketchls::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace testing

#endif
