#include "helpers.hpp"

#include "sketchls/criteria.hpp"
#include "sketchls/estimators.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace sketchls;
using testing::error_code;
using testing::max_abs;
using testing::random_matrix;

namespace {

const std::vector<SketchTag> kRandomTags{
    SketchTag::leverage_rescaled,   SketchTag::leverage_unrescaled,
    SketchTag::uniform,             SketchTag::shrinkage_rescaled,
    SketchTag::gaussian_projection, SketchTag::rademacher_projection,
    SketchTag::hadamard};

// Criteria computed from X and a materialized S without the U-basis
// factorization: P_S = X (SX)^+ S.
struct DenseOracle {
  double c_pe;
  double c_wc;
};

DenseOracle dense_oracle(const Matrix& x, const Matrix& s, const Vector& beta) {
  const Index n = x.rows(), p = x.cols();
  const Matrix sx = s * x;
  const Matrix ps = x * sx.completeOrthogonalDecomposition().pseudoInverse() * s;
  const Vector xb = x * beta;
  const double bias = (ps * xb - xb).squaredNorm();
  DenseOracle out{};
  out.c_pe = (bias + ps.squaredNorm()) / static_cast<double>(p);
  // sup over e in null(X^T) of ||(I - P_S) e||^2 / ||e||^2
  Eigen::HouseholderQR<Matrix> qr(x);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix null_basis = q.rightCols(n - p);
  const Matrix m = (Matrix::Identity(n, n) - ps) * null_basis;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m.transpose() * m, Eigen::EigenvaluesOnly);
  out.c_wc = eig.eigenvalues().maxCoeff();
  return out;
}

SketchDraw dense_draw(const Matrix& s) { return SketchDraw{DenseProjection{s}, s.rows(), s.cols()}; }

} // namespace

TEST_CASE("identity sketch: projection and criteria") {
  const Matrix x = random_matrix(12, 3, 1);
  const auto design = factor_design(x);
  const auto draw = identity_sketch(12);
  const Matrix pi = oblique_projection(design.u, draw);
  CHECK(max_abs(pi - design.u * design.u.transpose()) < 1e-12);
  CHECK(pi.squaredNorm() == doctest::Approx(3.0));

  const auto rep = closed_form_criteria(design, draw, Vector::Ones(3));
  CHECK(std::abs(rep.c_wc - 1.0) < 1e-12);
  CHECK(std::abs(rep.c_pe - 1.0) < 1e-12);
  CHECK(std::abs(rep.c_re - 1.0) < 1e-12);
  CHECK(rep.bias_sq < 1e-24);
  CHECK(rep.rank_preserved);

  const auto c = structural_constants(design.u, draw);
  CHECK(c.alpha_min == doctest::Approx(1.0));
  CHECK(c.beta_nullspace < 1e-12);
  CHECK(c.gamma_frobenius == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("scaled identity homogeneity") {
  const Matrix x = random_matrix(10, 2, 2);
  const auto design = factor_design(x);
  const double c = 2.5;
  const auto draw = dense_draw(c * Matrix::Identity(10, 10));
  const auto k = structural_constants(design.u, draw);
  CHECK(k.alpha_min == doctest::Approx(c));
  CHECK(k.gamma_frobenius == doctest::Approx(c * c * std::sqrt(2.0)));
  const auto rep = closed_form_criteria(design, draw, Vector::Ones(2));
  CHECK(rep.c_pe == doctest::Approx(1.0));
}

TEST_CASE("rank-losing draw gives infinite c_wc") {
  const Matrix x = random_matrix(10, 3, 3);
  Vector probs = Vector::Zero(10);
  probs(4) = 1.0;
  RngStream rng(4, 0);
  const auto draw = draw_sampling_sketch(probs, 6, true, rng);
  const auto rep = closed_form_criteria(x, draw, Vector::Ones(3));
  CHECK_FALSE(rep.rank_preserved);
  CHECK(std::isinf(rep.c_wc));
  CHECK(rep.bias_sq > 0.0);
  CHECK(std::isfinite(rep.c_pe));
}

TEST_CASE("closed form matches dense oracle on random draws") {
  const Index n = 32, p = 3;
  const Matrix x = random_matrix(n, p, 5);
  Vector beta(p);
  beta << 1, -1, 2;
  const auto design = factor_design(x);
  const Vector lev = leverage_scores(x);
  for (auto tag : kRandomTags) {
    for (Index r : {Index{2}, Index{10}}) {
      RngStream rng(6, static_cast<std::uint64_t>(tag) * 100 + static_cast<std::uint64_t>(r));
      const auto draw = draw_sketch(SketchKind::of(tag), lev, r, n, rng);
      const auto ev = evaluate_draw(design, draw, beta);
      const Matrix s = materialize(draw);
      if (ev.report.rank_preserved) {
        const auto oracle = dense_oracle(x, s, beta);
        CHECK_MESSAGE(ev.report.c_pe == doctest::Approx(oracle.c_pe).epsilon(1e-9), to_string(tag));
        CHECK_MESSAGE(ev.report.c_wc == doctest::Approx(oracle.c_wc).epsilon(1e-8), to_string(tag));
      } else {
        // (SX)^+ != V Sigma^-1 (SU)^+ once SU loses rank, so the oracle is
        // written in the U basis: bias uses Sigma V^T beta directly.
        CHECK(std::isinf(ev.report.c_wc));
        const Matrix su = s * design.u;
        const Matrix sup = su.completeOrthogonalDecomposition().pseudoInverse();
        const Vector w = design.singular_values.asDiagonal() * design.v.transpose() * beta;
        const double bias = (sup * su * w - w).squaredNorm();
        const double pi_f = (design.u * sup * s).squaredNorm();
        CHECK(ev.report.bias_sq == doctest::Approx(bias).epsilon(1e-8));
        CHECK(ev.report.c_pe == doctest::Approx((bias + pi_f) / static_cast<double>(p)).epsilon(1e-8));
      }
      // evaluate_draw and the standalone paths agree
      const auto rep = closed_form_criteria(design, draw, beta);
      CHECK(rep.c_pe == doctest::Approx(ev.report.c_pe).epsilon(1e-12));
      const auto k = structural_constants(design.u, draw);
      CHECK(k.gamma_frobenius == doctest::Approx(ev.constants.gamma_frobenius).epsilon(1e-12));
    }
  }
}

TEST_CASE("structural constants match dense definitions") {
  const Index n = 20, p = 3;
  const Matrix x = random_matrix(n, p, 7);
  const auto design = factor_design(x);
  RngStream rng(8, 0);
  const auto draw = draw_dense_projection(ProjectionKind::gaussian, 8, n, rng);
  const Matrix s = materialize(draw);
  const Matrix& u = design.u;
  const Matrix sts = s.transpose() * s;
  const auto k = structural_constants(u, draw);
  Eigen::JacobiSVD<Matrix> su(s * u);
  CHECK(k.alpha_min == doctest::Approx(su.singularValues().minCoeff()).epsilon(1e-10));
  Eigen::JacobiSVD<Matrix> b(u.transpose() * sts * (Matrix::Identity(n, n) - u * u.transpose()));
  CHECK(k.beta_nullspace == doctest::Approx(b.singularValues()(0)).epsilon(1e-10));
  CHECK(k.gamma_frobenius == doctest::Approx((u.transpose() * sts).norm()).epsilon(1e-10));
}

TEST_CASE("invariants over random draws") {
  const Index n = 40, p = 4;
  const Matrix x = random_matrix(n, p, 9);
  const auto design = factor_design(x);
  const Vector lev = leverage_scores(x);
  const Vector beta = Vector::Ones(p);
  for (auto tag : kRandomTags) {
    for (std::uint64_t t = 0; t < 5; ++t) {
      RngStream rng(10 + t, static_cast<std::uint64_t>(tag));
      const auto draw = draw_sketch(SketchKind::of(tag), lev, 12, n, rng);
      const Matrix pi = oblique_projection(design.u, draw);
      CHECK(max_abs(pi * pi - pi) < 1e-8);
      const auto ev = evaluate_draw(design, draw, beta);
      const auto& rep = ev.report;
      const double nd = static_cast<double>(n), pd = static_cast<double>(p);
      CHECK(std::abs((rep.c_re - 1.0) - (rep.c_pe - 1.0) / (nd / pd - 1.0)) < 1e-12);
      CHECK(rep.c_pe > 0.0);
      CHECK(rep.c_re > 0.0);
      if (rep.rank_preserved) {
        CHECK(rep.c_wc >= 1.0);
        CHECK(rep.bias_sq < 1e-18 * x.squaredNorm());
        CHECK(rep.pi_frobenius_sq >= pd - 1e-8);
        for (const auto& chk : verify_lemma2(ev.constants, rep, p, n))
          CHECK_MESSAGE(chk.satisfied, chk.bound_name << " " << chk.observed << " > " << chk.rhs);
      }
    }
  }
}

TEST_CASE("Lemma-2 on identity and 20 gaussian draws") {
  const Index n = 64, p = 4;
  const Matrix x = random_matrix(n, p, 11);
  const auto design = factor_design(x);
  const auto id = evaluate_draw(design, identity_sketch(n), Vector::Ones(p));
  for (const auto& chk : verify_lemma2(id.constants, id.report, p, n)) {
    CHECK(chk.satisfied);
    CHECK(chk.rhs >= chk.observed - 1e-12);
  }
  int satisfied = 0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    RngStream rng(12, t);
    const auto draw = draw_dense_projection(ProjectionKind::gaussian, 32, n, rng);
    const auto ev = evaluate_draw(design, draw, Vector::Ones(p));
    bool ok = true;
    for (const auto& chk : verify_lemma2(ev.constants, ev.report, p, n)) ok &= chk.satisfied;
    satisfied += ok;
  }
  CHECK(satisfied == 20);
}

TEST_CASE("Lemma-2 wc check is skipped on rank loss") {
  const Matrix x = random_matrix(10, 3, 13);
  const auto design = factor_design(x);
  Vector probs = Vector::Zero(10);
  probs(0) = 1.0;
  RngStream rng(14, 0);
  const auto ev = evaluate_draw(design, draw_sampling_sketch(probs, 4, true, rng), Vector::Ones(3));
  const auto checks = verify_lemma2(ev.constants, ev.report, 3, 10);
  REQUIRE(checks.size() == 3);
  CHECK(checks[0].bound_name == "lemma2_wc");
  CHECK(checks[0].skipped);
}

TEST_CASE("factor_design rejects rank-deficient and wide designs") {
  Matrix x = random_matrix(10, 3, 15);
  x.col(2) = x.col(0);
  CHECK(error_code([&] { factor_design(x); }) == ErrorCode::invalid_input);
  CHECK(error_code([&] { factor_design(random_matrix(2, 3, 16)); }) == ErrorCode::invalid_input);
}

TEST_CASE("Monte Carlo: identity sketch and chi-square denominator") {
  const Index n = 64, p = 4, reps = 400;
  const Matrix x = random_matrix(n, p, 17);
  const auto mc = monte_carlo_criteria(x, Vector::Ones(p), SketchKind::of(SketchTag::identity), n,
                                       reps, RngStream(18, 0));
  CHECK(mc.report.c_pe == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(mc.report.c_re == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(mc.pe_den_mean - static_cast<double>(p)) <=
        3.0 * std::sqrt(2.0 * static_cast<double>(p) / static_cast<double>(reps)));
  CHECK(mc.rank_failures == 0);
  CHECK(error_code([&] {
          monte_carlo_criteria(x, Vector::Ones(p), SketchKind::of(SketchTag::identity), n, 1,
                               RngStream(18, 0));
        }) == ErrorCode::invalid_input);
}

TEST_CASE("Monte Carlo agrees with closed form within 3 standard errors") {
  const Index n = 64, p = 4, r = 32, draws = 200;
  const Matrix x = random_matrix(n, p, 19);
  const Vector beta = Vector::Ones(p);
  const auto design = factor_design(x);
  const Vector lev = leverage_scores(x);
  for (auto tag : {SketchTag::gaussian_projection, SketchTag::hadamard, SketchTag::leverage_rescaled}) {
    const auto kind = SketchKind::of(tag);
    const RngStream root(20, static_cast<std::uint64_t>(tag));
    double sum = 0, sum2 = 0;
    for (Index t = 0; t < draws; ++t) {
      RngStream rng = root.derive(static_cast<std::uint64_t>(t) + 1000000);
      const double c = closed_form_criteria(design, draw_sketch(kind, lev, r, n, rng), beta).c_pe;
      sum += c;
      sum2 += c * c;
    }
    const double mean = sum / draws;
    const double se_closed = std::sqrt((sum2 / draws - mean * mean) / draws);
    const auto mc = monte_carlo_criteria(x, beta, kind, r, draws, root);
    const double se = std::hypot(se_closed, mc.c_pe_stderr);
    CHECK_MESSAGE(std::abs(mc.report.c_pe - mean) <= 3.0 * se,
                  to_string(tag) << " mc " << mc.report.c_pe << " closed " << mean << " se " << se);
  }
}

TEST_CASE("probe estimate is a lower bound on closed-form c_wc") {
  const Matrix x = random_matrix(48, 3, 21);
  const auto design = factor_design(x);
  RngStream rng(22, 0);
  const auto draw = draw_dense_projection(ProjectionKind::gaussian, 10, 48, rng);
  const double closed = closed_form_criteria(design, draw, Vector::Ones(3)).c_wc;
  const double probe = probe_worst_case(design, draw, 50, rng);
  CHECK(probe >= 1.0);
  CHECK(probe <= closed * (1.0 + 1e-12));
}

TEST_CASE("theorem bound formulas") {
  const auto t1 = theorem_bound(SketchKind::of(SketchTag::leverage_rescaled), 1024, 50, 200);
  REQUIRE(t1.size() == 3);
  CHECK(t1[0].criterion == Criterion::wc);
  CHECK(t1[0].rhs == doctest::Approx(4.0));
  CHECK(t1[0].nominal_probability == doctest::Approx(0.7));

  const auto t3 = theorem_bound(SketchKind::of(SketchTag::gaussian_projection), 1024, 50, 512);
  CHECK(t3[1].criterion == Criterion::pe);
  CHECK(t3[1].rhs == doctest::Approx(132.0));
  CHECK(t3[0].rhs == doctest::Approx(1.0 + 11.0 * 50 / 512));

  const auto t2 = theorem_bound(SketchKind::of(SketchTag::leverage_unrescaled), 1024, 50, 200, 100);
  CHECK(t2[1].rhs == doctest::Approx(44.0 * 100 / 200));
  CHECK(t2[2].rhs == doctest::Approx(1.0 + 44.0 * 50 * 100 / (1024.0 * 200)));
  CHECK(t2[0].nominal_probability == doctest::Approx(0.6));

  const auto t4 = theorem_bound(SketchKind::of(SketchTag::hadamard), 1024, 50, 200);
  REQUIRE(t4.size() == 5);
  const double l = 40.0 * std::log(1024.0 * 50.0);
  CHECK(t4[1].bound_name == "thm4_pe_printed");
  CHECK(t4[1].rhs == doctest::Approx(1.0 + l * (1.0 + 50.0 / 200)));
  CHECK(t4[3].bound_name == "thm4_pe_swapped");
  CHECK(t4[3].rhs == doctest::Approx(l * (1.0 + 1024.0 / 200)));

  CHECK(error_code([] { theorem_bound(SketchKind::of(SketchTag::uniform), 10, 2, 5); }) ==
        ErrorCode::invalid_input);
  CHECK(error_code([] { theorem_bound(SketchKind::of(SketchTag::leverage_unrescaled), 10, 2, 5); }) ==
        ErrorCode::invalid_input);
}

TEST_CASE("lower-bound condition") {
  const Vector flat = Vector::Constant(32, 1.0 / 32);
  const double g = lower_bound_condition(SketchKind::of(SketchTag::gaussian_projection), flat, 8, 32,
                                         1000, RngStream(23, 0));
  CHECK(g == doctest::Approx(1.0).epsilon(0.15));

  const double u = lower_bound_condition(SketchKind::of(SketchTag::uniform),
                                         Vector::Constant(16, 1.0), 4, 16, 1000, RngStream(24, 0));
  CHECK(u == doctest::Approx(1.0).epsilon(0.2));

  Vector point = Vector::Zero(16);
  point(0) = 1.0;
  const double pm = lower_bound_condition(SketchKind::of(SketchTag::leverage_unrescaled), point, 4,
                                          16, 1000, RngStream(25, 0));
  CHECK(pm >= 3.0);
  CHECK(pm == doctest::Approx(4.0));

  CHECK(error_code([&] {
          lower_bound_condition(SketchKind::of(SketchTag::gaussian_projection), flat, 8, 32, 5,
                                RngStream(1, 0));
        }) == ErrorCode::invalid_input);
}

TEST_CASE("heavy hitter k") {
  CHECK(heavy_hitter_k(Vector::Constant(10, 0.3), 0.9) == 9);
  CHECK(heavy_hitter_k(Vector::Constant(7, 1.0), 0.9) == static_cast<Index>(std::ceil(0.9 * 7)));
  Vector one = Vector::Zero(8);
  one(5) = 1.0;
  CHECK(heavy_hitter_k(one, 0.9) == 1);
  CHECK(heavy_hitter_k(one, 1.0) == 1);
  CHECK(error_code([&] { heavy_hitter_k(one, 0.0); }) == ErrorCode::invalid_input);
  CHECK(error_code([&] { heavy_hitter_k(one, 1.5); }) == ErrorCode::invalid_input);
}
