#include "sketchls/sketch.hpp"

#include "sketchls/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sketchls {

namespace {

constexpr double kProbabilitySumTol = 1e-9;

struct TagName {
  SketchTag tag;
  std::string_view name;
  std::string_view alias;
};

constexpr TagName kTagNames[] = {
    {SketchTag::leverage_rescaled, "leverage_rescaled", "S_R"},
    {SketchTag::leverage_unrescaled, "leverage_unrescaled", "S_NR"},
    {SketchTag::uniform, "uniform", "S_Unif"},
    {SketchTag::shrinkage_rescaled, "shrinkage_rescaled", "S_Shr"},
    {SketchTag::gaussian_projection, "gaussian_projection", "S_GP"},
    {SketchTag::rademacher_projection, "rademacher_projection", "S_SGP"},
    {SketchTag::hadamard, "hadamard", "S_Had"},
    {SketchTag::identity, "identity", "I"},
};

void check_sizes(Index r, Index n) {
  if (r < 1) throw_invalid("sketch: r must be >= 1");
  if (n < 1) throw_invalid("sketch: n must be >= 1");
}

} // namespace

std::string_view to_string(SketchTag tag) {
  for (const auto& t : kTagNames)
    if (t.tag == tag) return t.name;
  return "unknown";
}

SketchTag parse_sketch_tag(std::string_view name) {
  for (const auto& t : kTagNames)
    if (t.name == name || t.alias == name) return t.tag;
  throw_invalid("unknown sketch kind '" + std::string(name) + "'");
}

SketchKind SketchKind::of(SketchTag tag) {
  SketchKind k;
  k.tag = tag;
  if (tag == SketchTag::shrinkage_rescaled) k.theta = 0.1;
  return k;
}

std::string SketchKind::label() const {
  std::string s(to_string(tag));
  if (approximate_leverage && needs_leverage()) s += "~approx";
  if (tag == SketchTag::uniform && !rescale_uniform) s += "~norescale";
  return s;
}

bool SketchKind::needs_leverage() const {
  return tag == SketchTag::leverage_rescaled ||
         tag == SketchTag::leverage_unrescaled ||
         tag == SketchTag::shrinkage_rescaled;
}

void SketchKind::validate() const {
  if (!(theta >= 0.0 && theta < 1.0))
    throw_invalid("sketch kind: theta must lie in [0, 1)");
  if (mixture_q) {
    if (!mixture_q->allFinite() || (mixture_q->array() < 0.0).any())
      throw_invalid("sketch kind: mixture_q must be finite and nonnegative");
    if (std::abs(mixture_q->sum() - 1.0) > 1e-10)
      throw_invalid("sketch kind: mixture_q must sum to 1");
  }
}

bool SketchDraw::operator==(const SketchDraw& other) const {
  if (r != other.r || n != other.n || op.index() != other.op.index())
    return false;
  if (const auto* a = std::get_if<RowSample>(&op)) {
    const auto& b = std::get<RowSample>(other.op);
    return a->indices == b.indices && a->weights == b.weights;
  }
  if (const auto* a = std::get_if<DenseProjection>(&op)) {
    const auto& b = std::get<DenseProjection>(other.op);
    return a->s.rows() == b.s.rows() && a->s.cols() == b.s.cols() &&
           std::equal(a->s.data(), a->s.data() + a->s.size(), b.s.data());
  }
  const auto& a = std::get<Srht>(op);
  const auto& b = std::get<Srht>(other.op);
  return a.sign_flips == b.sign_flips && a.sampled_rows == b.sampled_rows &&
         a.scale == b.scale && a.n_pad == b.n_pad;
}

Vector sampling_probabilities(const Vector& lev, double theta,
                              const std::optional<Vector>& q) {
  if (!(theta >= 0.0 && theta < 1.0))
    throw_invalid("sampling_probabilities: theta must lie in [0, 1)");
  if (lev.size() == 0) throw_invalid("sampling_probabilities: empty leverage");
  if (!lev.allFinite() || (lev.array() < 0.0).any())
    throw_invalid("sampling_probabilities: leverage scores must be finite and >= 0");
  const double mass = lev.sum();
  if (!(mass > 0.0))
    throw_invalid("sampling_probabilities: leverage scores sum to zero");

  const auto n = lev.size();
  Vector out = (1.0 - theta) * (lev / mass);
  if (q) {
    if (q->size() != n)
      throw_invalid("sampling_probabilities: q length differs from leverage length");
    if (!q->allFinite() || (q->array() < 0.0).any() ||
        std::abs(q->sum() - 1.0) > 1e-10)
      throw_invalid("sampling_probabilities: q must be a probability vector");
    out += theta * *q;
  } else if (theta > 0.0) {
    out.array() += theta / static_cast<double>(n);
  }
  return out;
}

SketchDraw draw_sampling_sketch(const Vector& probs, Index r, bool rescale,
                                RngStream& rng) {
  check_sizes(r, probs.size());
  if (!probs.allFinite() || (probs.array() < 0.0).any() ||
      std::abs(probs.sum() - 1.0) > kProbabilitySumTol)
    throw_invalid("draw_sampling_sketch: probabilities must be nonnegative and sum to 1");

  const CategoricalSampler sampler(
      std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())));
  RowSample rows;
  rows.indices.resize(static_cast<std::size_t>(r));
  rows.weights.assign(static_cast<std::size_t>(r), 1.0);
  for (Index j = 0; j < r; ++j) {
    const auto i = static_cast<Index>(sampler(rng));
    rows.indices[j] = i;
    if (rescale)
      rows.weights[j] = std::sqrt(1.0 / (static_cast<double>(r) * probs(i)));
  }
  return SketchDraw{std::move(rows), r, probs.size()};
}

SketchDraw draw_dense_projection(ProjectionKind kind, Index r, Index n,
                                 RngStream& rng) {
  check_sizes(r, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(r));
  Matrix s(r, n);
  // fill row by row so the draw sequence is independent of storage order
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < n; ++j)
      s(i, j) = scale * (kind == ProjectionKind::gaussian ? rng.normal()
                                                          : rng.rademacher());
  return SketchDraw{DenseProjection{std::move(s)}, r, n};
}

SketchDraw draw_srht_sketch(Index r, Index n, RngStream& rng) {
  check_sizes(r, n);
  Srht h;
  h.n_pad = next_power_of_two(n);
  h.sign_flips.resize(static_cast<std::size_t>(h.n_pad));
  for (auto& d : h.sign_flips) d = rng.rademacher();
  h.sampled_rows.resize(static_cast<std::size_t>(r));
  for (auto& row : h.sampled_rows)
    row = static_cast<Index>(rng.below(static_cast<std::uint64_t>(h.n_pad)));
  // sqrt(n_pad / r) uniform rescale times 1 / sqrt(n_pad) for H
  h.scale = std::sqrt(static_cast<double>(h.n_pad) / static_cast<double>(r)) /
            std::sqrt(static_cast<double>(h.n_pad));
  return SketchDraw{std::move(h), r, n};
}

SketchDraw identity_sketch(Index n) {
  check_sizes(n, n);
  RowSample rows;
  rows.indices.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows.indices[i] = i;
  rows.weights.assign(static_cast<std::size_t>(n), 1.0);
  return SketchDraw{std::move(rows), n, n};
}

SketchDraw draw_sketch(const SketchKind& kind, const Vector& lev, Index r,
                       Index n, RngStream& rng) {
  kind.validate();
  if (kind.needs_leverage() && lev.size() != n)
    throw_invalid("draw_sketch: leverage scores required for " + kind.label());
  switch (kind.tag) {
  case SketchTag::leverage_rescaled:
    return draw_sampling_sketch(sampling_probabilities(lev, 0.0), r, true, rng);
  case SketchTag::leverage_unrescaled:
    return draw_sampling_sketch(sampling_probabilities(lev, 0.0), r, false, rng);
  case SketchTag::shrinkage_rescaled:
    return draw_sampling_sketch(
        sampling_probabilities(lev, kind.theta, kind.mixture_q), r, true, rng);
  case SketchTag::uniform: {
    const Vector probs =
        Vector::Constant(n, 1.0 / static_cast<double>(n));
    return draw_sampling_sketch(probs, r, kind.rescale_uniform, rng);
  }
  case SketchTag::gaussian_projection:
    return draw_dense_projection(ProjectionKind::gaussian, r, n, rng);
  case SketchTag::rademacher_projection:
    return draw_dense_projection(ProjectionKind::rademacher, r, n, rng);
  case SketchTag::hadamard:
    return draw_srht_sketch(r, n, rng);
  case SketchTag::identity:
    return identity_sketch(n);
  }
  throw_invalid("draw_sketch: unknown sketch kind");
}

Matrix apply_sketch(const SketchDraw& draw, const Matrix& m) {
  if (m.rows() != draw.n)
    throw_invalid("apply_sketch: matrix has " + std::to_string(m.rows()) +
                  " rows, sketch expects " + std::to_string(draw.n));
  if (const auto* rows = std::get_if<RowSample>(&draw.op)) {
    Matrix out(draw.r, m.cols());
    for (Index j = 0; j < draw.r; ++j)
      out.row(j) = rows->weights[j] * m.row(rows->indices[j]);
    return out;
  }
  if (const auto* dense = std::get_if<DenseProjection>(&draw.op))
    return dense->s * m;

  const auto& h = std::get<Srht>(draw.op);
  Matrix padded = Matrix::Zero(h.n_pad, m.cols());
  for (Index i = 0; i < draw.n; ++i) padded.row(i) = h.sign_flips[i] * m.row(i);
  fwht_columns(padded);
  Matrix out(draw.r, m.cols());
  for (Index j = 0; j < draw.r; ++j)
    out.row(j) = h.scale * padded.row(h.sampled_rows[j]);
  return out;
}

Matrix apply_sketch_transpose(const SketchDraw& draw, const Matrix& m) {
  if (m.rows() != draw.r)
    throw_invalid("apply_sketch_transpose: matrix has " +
                  std::to_string(m.rows()) + " rows, sketch has " +
                  std::to_string(draw.r));
  if (const auto* rows = std::get_if<RowSample>(&draw.op)) {
    Matrix out = Matrix::Zero(draw.n, m.cols());
    for (Index j = 0; j < draw.r; ++j)
      out.row(rows->indices[j]) += rows->weights[j] * m.row(j);
    return out;
  }
  if (const auto* dense = std::get_if<DenseProjection>(&draw.op))
    return dense->s.transpose() * m;

  const auto& h = std::get<Srht>(draw.op);
  Matrix padded = Matrix::Zero(h.n_pad, m.cols());
  for (Index j = 0; j < draw.r; ++j)
    padded.row(h.sampled_rows[j]) += h.scale * m.row(j);
  fwht_columns(padded); // H is symmetric
  Matrix out(draw.n, m.cols());
  for (Index i = 0; i < draw.n; ++i) out.row(i) = h.sign_flips[i] * padded.row(i);
  return out;
}

Matrix materialize(const SketchDraw& draw) {
  if (const auto* dense = std::get_if<DenseProjection>(&draw.op)) return dense->s;
  // S^T I_r, transposed: reuses the structured transpose path
  return apply_sketch_transpose(draw, Matrix::Identity(draw.r, draw.r)).transpose();
}

Index default_approx_sketch_rows(Index p) {
  if (p <= 1) return std::max<Index>(p, 1);
  const double rows = 4.0 * static_cast<double>(p) * std::log(static_cast<double>(p));
  return std::max<Index>(p, static_cast<Index>(std::ceil(rows)));
}

Vector approx_leverage_scores(const Matrix& x, Index sketch_r, RngStream& rng) {
  require_finite(x, "approx_leverage_scores");
  if (sketch_r < x.cols())
    throw_invalid("approx_leverage_scores: sketch_r must be >= number of columns");

  Matrix sx = sketch_r >= x.rows() ? x : apply_sketch(draw_srht_sketch(sketch_r, x.rows(), rng), x);
  Eigen::ColPivHouseholderQR<Matrix> qr(sx);
  if (qr.rank() < x.cols())
    throw_numeric("approx_leverage_scores: sketched matrix has rank " +
                  std::to_string(qr.rank()) + " < " + std::to_string(x.cols()) +
                  "; increase sketch_r");
  const Index p = x.cols();
  const Matrix r_factor = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Matrix xp = x * qr.colsPermutation();
  // Z = X P R^{-1}  <=>  R^T Z^T = (X P)^T
  const Matrix zt = r_factor.transpose().triangularView<Eigen::Lower>().solve(xp.transpose());
  return zt.colwise().squaredNorm().transpose();
}

} // namespace sketchls
