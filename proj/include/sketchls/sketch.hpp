#ifndef SKETCHLS_SKETCH_HPP
#define SKETCHLS_SKETCH_HPP

#include "sketchls/linalg.hpp"
#include "sketchls/rng.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sketchls {

enum class SketchTag {
  leverage_rescaled,   // S_R
  leverage_unrescaled, // S_NR
  uniform,             // S_Unif
  shrinkage_rescaled,  // S_Shr
  gaussian_projection, // S_GP
  rademacher_projection,
  hadamard,            // SRHT
  identity,            // S = I_n, harness sanity baseline
};

std::string_view to_string(SketchTag tag);
/// Accepts the snake_case names produced by to_string plus the short
/// aliases S_R, S_NR, S_Unif, S_Shr, S_GP, S_Had.
SketchTag parse_sketch_tag(std::string_view name);

struct SketchKind {
  SketchTag tag = SketchTag::leverage_rescaled;
  /// Mixture weight for shrinkage_rescaled; ignored elsewhere.
  double theta = 0.0;
  /// Mixture component; uniform when absent.
  std::optional<Vector> mixture_q;
  /// Whether uniform sampling is rescaled by sqrt(n / r).
  bool rescale_uniform = true;
  /// Sample from sketched-QR leverage estimates instead of exact scores.
  bool approximate_leverage = false;

  static SketchKind of(SketchTag tag);
  /// Display label, e.g. "shrinkage_rescaled" or "leverage_rescaled~approx".
  std::string label() const;
  void validate() const;
  bool needs_leverage() const;
};

/// r rows drawn with replacement; row j of S is weights[j] * e_{indices[j]}^T.
struct RowSample {
  std::vector<Index> indices;
  std::vector<double> weights;
};

struct DenseProjection {
  Matrix s; // r x n
};

/// S = scale * P H D E, where E zero-pads n -> n_pad, D = diag(sign_flips),
/// H is the unnormalized Hadamard matrix and P picks sampled_rows.
struct Srht {
  std::vector<double> sign_flips;
  std::vector<Index> sampled_rows;
  double scale = 1.0;
  Index n_pad = 0;
};

/// Realized sketching operator S (r x n) in structured form.
struct SketchDraw {
  std::variant<RowSample, DenseProjection, Srht> op;
  Index r = 0;
  Index n = 0;

  bool operator==(const SketchDraw&) const;
};

/// p_i = (1 - theta) * lev_i / sum(lev) + theta * q_i.
Vector sampling_probabilities(const Vector& lev, double theta,
                              const std::optional<Vector>& q = {});

SketchDraw draw_sampling_sketch(const Vector& probs, Index r, bool rescale,
                                RngStream& rng);

enum class ProjectionKind { gaussian, rademacher };

SketchDraw draw_dense_projection(ProjectionKind kind, Index r, Index n,
                                 RngStream& rng);

SketchDraw draw_srht_sketch(Index r, Index n, RngStream& rng);

SketchDraw identity_sketch(Index n);

/// Draw for any kind. `lev` holds leverage scores of the design and is
/// required by the sampling kinds.
SketchDraw draw_sketch(const SketchKind& kind, const Vector& lev, Index r,
                       Index n, RngStream& rng);

/// S * M (r x cols).
Matrix apply_sketch(const SketchDraw& draw, const Matrix& m);
/// S^T * M (n x cols), for M with r rows.
Matrix apply_sketch_transpose(const SketchDraw& draw, const Matrix& m);
/// Dense r x n matrix of the operator (test and diagnostics path).
Matrix materialize(const SketchDraw& draw);

/// Row norms of X R^{-1} where R comes from a QR factorization of an SRHT
/// sketch of X with sketch_r rows. Uses X itself when sketch_r >= n.
Vector approx_leverage_scores(const Matrix& x, Index sketch_r, RngStream& rng);
/// 4 p log p, at least p.
Index default_approx_sketch_rows(Index p);

} // namespace sketchls

#endif
