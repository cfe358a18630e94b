#ifndef SKETCHLS_CRITERIA_HPP
#define SKETCHLS_CRITERIA_HPP

#include "sketchls/linalg.hpp"
#include "sketchls/rng.hpp"
#include "sketchls/sketch.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sketchls {

/// Thin SVD X = U diag(s) V^T of a full-column-rank design, computed once and
/// reused across sketch draws.
struct DesignFactors {
  Matrix x;
  Matrix u;
  Vector singular_values;
  Matrix v;

  Index n() const { return x.rows(); }
  Index p() const { return x.cols(); }
};

/// Throws invalid-input when X is rank deficient or has fewer rows than
/// columns.
DesignFactors factor_design(const Matrix& x);

struct CriteriaReport {
  /// +infinity when the draw does not preserve rank.
  double c_wc = 1.0;
  double c_pe = 1.0;
  double c_re = 1.0;
  /// ||(I - (SU)^+ SU) Sigma V^T beta||^2
  double bias_sq = 0.0;
  bool rank_preserved = true;
  /// ||U (SU)^+ S||_F^2
  double pi_frobenius_sq = 0.0;
};

struct StructuralConstants {
  /// Smallest nonzero singular value of SU (0 when SU = 0).
  double alpha_min = 0.0;
  /// sigma_max(U^T S^T S (I - U U^T)).
  double beta_nullspace = 0.0;
  /// ||U^T S^T S||_F.
  double gamma_frobenius = 0.0;
};

struct BoundCheck {
  std::string bound_name;
  double rhs = 0.0;
  double observed = 0.0;
  bool satisfied = true;
  /// Set when the bound is vacuous for this draw (both sides infinite).
  bool skipped = false;
};

/// Relative slack used when comparing an observed value against a bound, so
/// that equality cases (identity sketch) are not lost to rounding.
inline constexpr double kBoundSlack = 1e-10;
BoundCheck make_check(std::string name, double rhs, double observed);

/// Dense n x n oblique projection U (SU)^+ S.
Matrix oblique_projection(const Matrix& u, const SketchDraw& draw);

CriteriaReport closed_form_criteria(const DesignFactors& design,
                                    const SketchDraw& draw,
                                    const Vector& beta_true);
CriteriaReport closed_form_criteria(const Matrix& x, const SketchDraw& draw,
                                    const Vector& beta_true);

StructuralConstants structural_constants(const Matrix& u,
                                         const SketchDraw& draw);

/// Closed-form criteria and structural constants from one pass over the
/// sketch (shares S U and its factorization).
struct DrawEvaluation {
  CriteriaReport report;
  StructuralConstants constants;
};
DrawEvaluation evaluate_draw(const DesignFactors& design,
                             const SketchDraw& draw, const Vector& beta_true);

/// 1 + max over `probes` random directions e in null(U^T) of
/// ||Pi e||^2 / ||e||^2. A lower bound on the closed-form c_wc.
double probe_worst_case(const DesignFactors& design, const SketchDraw& draw,
                        Index probes, RngStream& rng);

/// One noise replication of the linear model Y = X beta + eps for a fixed
/// draw: the numerators and denominators of the PE and RE ratios, plus the
/// worst-case quotient at the null-space component of eps.
struct ReplicationSample {
  double pe_num = 0.0; // ||X (beta - beta_S)||^2
  double pe_den = 0.0; // ||X (beta - beta_OLS)||^2
  double re_num = 0.0; // ||Y - X beta_S||^2
  double re_den = 0.0; // ||Y - X beta_OLS||^2
  double wc_probe = 1.0;
  bool rank_preserved = true;
};
ReplicationSample noise_replication(const DesignFactors& design,
                                    const SketchDraw& draw,
                                    const Vector& beta_true, RngStream& rng);

struct MonteCarloCriteria {
  /// c_pe and c_re are ratios of averaged numerators and denominators.
  /// c_wc is 1 + the mean probe quotient (a lower bound on the mean
  /// closed-form value); +infinity if any draw lost rank. bias_sq and
  /// pi_frobenius_sq are not estimated on this path and hold NaN.
  CriteriaReport report;
  double c_pe_stderr = 0.0;
  double c_re_stderr = 0.0;
  double pe_num_mean = 0.0;
  double pe_den_mean = 0.0;
  double re_num_mean = 0.0;
  double re_den_mean = 0.0;
  Index reps = 0;
  Index rank_failures = 0;
};

/// Fresh sketch and fresh standard normal noise per replication; the
/// replication index selects the child stream of `rng`.
MonteCarloCriteria monte_carlo_criteria(const Matrix& x, const Vector& beta_true,
                                        const SketchKind& kind, Index r,
                                        Index reps, const RngStream& rng);

/// Upper bounds on c_wc, c_pe, c_re in terms of alpha, beta, gamma.
/// The RE bound is the PE bound pushed through the exact identity
/// c_re = 1 + (c_pe - 1) / (n/p - 1).
std::vector<BoundCheck> verify_lemma2(const StructuralConstants& constants,
                                      const CriteriaReport& report, Index p,
                                      Index n);

enum class Criterion { wc, pe, re };

struct BoundTemplate {
  std::string bound_name;
  Criterion criterion = Criterion::wc;
  double rhs = 0.0;
  double nominal_probability = 0.0;
};

/// High-probability upper bounds for the sampling and projection sketches.
/// `k` (heavy-hitter count) is required for leverage_unrescaled. The
/// Hadamard bounds are returned under both the printed PE/RE labeling and
/// the swapped one (names suffixed "printed" and "swapped").
std::vector<BoundTemplate> theorem_bound(const SketchKind& kind, Index n,
                                         Index p, Index r,
                                         std::optional<Index> k = {});

double observed_value(const CriteriaReport& report, Criterion criterion);

/// Monte Carlo estimate of ||E[S^T (S S^T)^+ S]||_op * n / r. `lev` is used
/// only by the sampling kinds.
double lower_bound_condition(const SketchKind& kind, const Vector& lev, Index r,
                             Index n, Index draws, const RngStream& rng);

/// Smallest k such that the k largest scores carry at least `mass` of the
/// total.
Index heavy_hitter_k(const Vector& lev, double mass);

} // namespace sketchls

#endif
