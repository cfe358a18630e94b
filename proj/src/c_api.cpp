#include "sketchls/sketchls.h"

#include "sketchls/criteria.hpp"
#include "sketchls/datagen.hpp"
#include "sketchls/error.hpp"
#include "sketchls/estimators.hpp"
#include "sketchls/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

struct sls_matrix {
  sketchls::Matrix m;
};

struct sls_sketch {
  sketchls::SketchDraw draw;
};

struct sls_config {
  sketchls::ExperimentConfig config;
  std::string json_cache;
};

struct sls_table {
  sketchls::ResultTable table;
};

namespace {

thread_local std::string g_last_error;

template <class Fn>
int guarded(Fn&& fn) noexcept {
  try {
    g_last_error.clear();
    fn();
    return SLS_OK;
  } catch (const sketchls::Error& e) {
    g_last_error = e.what();
    switch (e.code()) {
    case sketchls::ErrorCode::invalid_input: return SLS_ERR_INVALID_INPUT;
    case sketchls::ErrorCode::numeric: return SLS_ERR_NUMERIC;
    case sketchls::ErrorCode::io: return SLS_ERR_IO;
    }
    return SLS_ERR_INTERNAL;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SLS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SLS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SLS_ERR_INTERNAL;
  }
}

template <class T>
void require(const T* ptr, const char* what) {
  if (!ptr) sketchls::throw_invalid(std::string(what) + " is NULL");
}

sketchls::SketchTag tag_of(int kind) {
  using sketchls::SketchTag;
  switch (kind) {
  case SLS_SKETCH_LEVERAGE_RESCALED: return SketchTag::leverage_rescaled;
  case SLS_SKETCH_LEVERAGE_UNRESCALED: return SketchTag::leverage_unrescaled;
  case SLS_SKETCH_UNIFORM: return SketchTag::uniform;
  case SLS_SKETCH_SHRINKAGE_RESCALED: return SketchTag::shrinkage_rescaled;
  case SLS_SKETCH_GAUSSIAN: return SketchTag::gaussian_projection;
  case SLS_SKETCH_RADEMACHER: return SketchTag::rademacher_projection;
  case SLS_SKETCH_HADAMARD: return SketchTag::hadamard;
  case SLS_SKETCH_IDENTITY: return SketchTag::identity;
  default: break;
  }
  sketchls::throw_invalid("unknown sketch kind " + std::to_string(kind));
}

sketchls::TableFormat format_of(int format) {
  if (format == SLS_FORMAT_CSV) return sketchls::TableFormat::csv;
  if (format == SLS_FORMAT_JSON) return sketchls::TableFormat::json;
  sketchls::throw_invalid("unknown table format " + std::to_string(format));
}

} // namespace

extern "C" {

const char* sls_version(void) { return sketchls::kLibraryVersion; }

const char* sls_last_error(void) { return g_last_error.c_str(); }

const char* sls_status_string(int status) {
  switch (status) {
  case SLS_OK: return "ok";
  case SLS_ERR_INVALID_INPUT: return "invalid input";
  case SLS_ERR_NUMERIC: return "numeric error";
  case SLS_ERR_IO: return "i/o error";
  case SLS_ERR_INTERNAL: return "internal error";
  default: return "unknown status";
  }
}

int sls_matrix_create(size_t rows, size_t cols, const double* row_major,
                      sls_matrix** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    if (rows * cols > 0) require(row_major, "row_major");
    auto h = std::make_unique<sls_matrix>();
    h->m.resize(static_cast<sketchls::Index>(rows), static_cast<sketchls::Index>(cols));
    for (size_t i = 0; i < rows; ++i)
      for (size_t j = 0; j < cols; ++j)
        h->m(static_cast<sketchls::Index>(i), static_cast<sketchls::Index>(j)) = row_major[i * cols + j];
    sketchls::require_finite(h->m, "sls_matrix_create");
    *out = h.release();
  });
}

void sls_matrix_free(sls_matrix* m) { delete m; }

int sls_matrix_dims(const sls_matrix* m, size_t* rows, size_t* cols) {
  return guarded([&] {
    require(m, "matrix");
    if (rows) *rows = static_cast<size_t>(m->m.rows());
    if (cols) *cols = static_cast<size_t>(m->m.cols());
  });
}

int sls_matrix_copy(const sls_matrix* m, double* row_major, size_t len) {
  return guarded([&] {
    require(m, "matrix");
    if (len != static_cast<size_t>(m->m.size()))
      sketchls::throw_invalid("sls_matrix_copy: buffer length mismatch");
    if (len > 0) require(row_major, "row_major");
    const auto cols = static_cast<size_t>(m->m.cols());
    for (sketchls::Index i = 0; i < m->m.rows(); ++i)
      for (sketchls::Index j = 0; j < m->m.cols(); ++j)
        row_major[static_cast<size_t>(i) * cols + static_cast<size_t>(j)] = m->m(i, j);
  });
}

int sls_generate_design(size_t n, size_t p, double nu, double ar_rho,
                        uint64_t seed, sls_matrix** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    sketchls::SyntheticSpec spec;
    spec.n = static_cast<sketchls::Index>(n);
    spec.p = static_cast<sketchls::Index>(p);
    spec.nu = nu;
    spec.ar_rho = ar_rho;
    spec.seed = seed;
    sketchls::RngStream rng(seed, 0);
    auto h = std::make_unique<sls_matrix>();
    h->m = sketchls::generate_design(spec, rng).x;
    *out = h.release();
  });
}

int sls_leverage_scores(const sls_matrix* x, double* out, size_t len) {
  return guarded([&] {
    require(x, "x");
    if (len != static_cast<size_t>(x->m.rows()))
      sketchls::throw_invalid("sls_leverage_scores: output length must equal rows");
    if (len > 0) require(out, "out");
    const sketchls::Vector lev = sketchls::leverage_scores(x->m);
    for (size_t i = 0; i < len; ++i) out[i] = lev(static_cast<sketchls::Index>(i));
  });
}

int sls_heavy_hitter_k(const double* lev, size_t len, double mass, size_t* k) {
  return guarded([&] {
    require(lev, "lev");
    require(k, "k");
    const sketchls::Vector v = Eigen::Map<const sketchls::Vector>(lev, static_cast<sketchls::Index>(len));
    *k = static_cast<size_t>(sketchls::heavy_hitter_k(v, mass));
  });
}

int sls_sketch_draw(const sls_matrix* x, int kind, double theta, size_t r,
                    uint64_t seed, uint64_t stream, sls_sketch** out) {
  return guarded([&] {
    require(x, "x");
    require(out, "out");
    *out = nullptr;
    sketchls::SketchKind k = sketchls::SketchKind::of(tag_of(kind));
    if (k.tag == sketchls::SketchTag::shrinkage_rescaled) k.theta = theta;
    sketchls::Vector lev;
    if (k.needs_leverage()) lev = sketchls::leverage_scores(x->m);
    sketchls::RngStream rng(seed, stream);
    auto h = std::make_unique<sls_sketch>();
    h->draw = sketchls::draw_sketch(k, lev, static_cast<sketchls::Index>(r), x->m.rows(), rng);
    *out = h.release();
  });
}

void sls_sketch_free(sls_sketch* s) { delete s; }

int sls_sketch_dims(const sls_sketch* s, size_t* r, size_t* n) {
  return guarded([&] {
    require(s, "sketch");
    if (r) *r = static_cast<size_t>(s->draw.r);
    if (n) *n = static_cast<size_t>(s->draw.n);
  });
}

int sls_sketch_apply(const sls_sketch* s, const sls_matrix* m, sls_matrix** out) {
  return guarded([&] {
    require(s, "sketch");
    require(m, "matrix");
    require(out, "out");
    *out = nullptr;
    auto h = std::make_unique<sls_matrix>();
    h->m = sketchls::apply_sketch(s->draw, m->m);
    *out = h.release();
  });
}

int sls_solve(const sls_sketch* s, const sls_matrix* x, const double* y,
              size_t n, double* beta, size_t p, size_t* rank_used) {
  return guarded([&] {
    require(x, "x");
    require(y, "y");
    require(beta, "beta");
    if (p != static_cast<size_t>(x->m.cols()))
      sketchls::throw_invalid("sls_solve: beta length must equal columns of X");
    const sketchls::Vector yv = Eigen::Map<const sketchls::Vector>(y, static_cast<sketchls::Index>(n));
    const sketchls::FitResult fit = s ? sketchls::sketched_solve(s->draw, x->m, yv)
                                      : sketchls::ols_solve(x->m, yv);
    for (size_t j = 0; j < p; ++j) beta[j] = fit.beta_hat(static_cast<sketchls::Index>(j));
    if (rank_used) *rank_used = static_cast<size_t>(fit.rank_used);
  });
}

int sls_criteria(const sls_matrix* x, const sls_sketch* s, const double* beta_true,
                 size_t p, sls_criteria_report* out) {
  return guarded([&] {
    require(x, "x");
    require(s, "sketch");
    require(beta_true, "beta_true");
    require(out, "out");
    const sketchls::Vector beta = Eigen::Map<const sketchls::Vector>(beta_true, static_cast<sketchls::Index>(p));
    const auto design = sketchls::factor_design(x->m);
    const auto eval = sketchls::evaluate_draw(design, s->draw, beta);
    out->c_wc = eval.report.c_wc;
    out->c_pe = eval.report.c_pe;
    out->c_re = eval.report.c_re;
    out->bias_sq = eval.report.bias_sq;
    out->pi_frobenius_sq = eval.report.pi_frobenius_sq;
    out->rank_preserved = eval.report.rank_preserved ? 1 : 0;
    out->alpha_min = eval.constants.alpha_min;
    out->beta_nullspace = eval.constants.beta_nullspace;
    out->gamma_frobenius = eval.constants.gamma_frobenius;
  });
}

int sls_config_default(sls_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new sls_config{sketchls::ExperimentConfig::defaults(), {}};
  });
}

int sls_config_parse(const char* json_text, sls_config** out) {
  return guarded([&] {
    require(json_text, "json_text");
    require(out, "out");
    *out = nullptr;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
      sketchls::throw_invalid(std::string("config: ") + e.what());
    }
    *out = new sls_config{sketchls::config_from_json(j), {}};
  });
}

int sls_config_load(const char* path, sls_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new sls_config{sketchls::load_config(path), {}};
  });
}

void sls_config_free(sls_config* c) { delete c; }

int sls_config_apply_env(sls_config* c) {
  return guarded([&] {
    require(c, "config");
    sketchls::apply_env_overrides(c->config);
  });
}

int sls_config_set_output_dir(sls_config* c, const char* dir) {
  return guarded([&] {
    require(c, "config");
    require(dir, "dir");
    c->config.output_dir = dir;
  });
}

int sls_config_set_mc_mode(sls_config* c, int mc_mode) {
  return guarded([&] {
    require(c, "config");
    c->config.mc_mode = mc_mode != 0;
  });
}

int sls_config_get_output_dir(const sls_config* c, const char** dir) {
  return guarded([&] {
    require(c, "config");
    require(dir, "dir");
    *dir = c->config.output_dir.c_str();
  });
}

int sls_config_to_json(sls_config* c, const char** json_text) {
  return guarded([&] {
    require(c, "config");
    require(json_text, "json_text");
    c->json_cache = sketchls::config_to_json(c->config).dump(2);
    *json_text = c->json_cache.c_str();
  });
}

int sls_run_experiment(const sls_config* c, unsigned threads, sls_table** out) {
  return guarded([&] {
    require(c, "config");
    require(out, "out");
    *out = nullptr;
    auto h = std::make_unique<sls_table>();
    h->table = sketchls::run_experiment(c->config, threads);
    *out = h.release();
  });
}

void sls_table_free(sls_table* t) { delete t; }

int sls_table_row_count(const sls_table* t, size_t* rows, size_t* aggregates) {
  return guarded([&] {
    require(t, "table");
    if (rows) *rows = t->table.rows.size();
    if (aggregates) *aggregates = t->table.aggregates.size();
  });
}

int sls_table_write(const sls_table* t, int format, const char* dir) {
  return guarded([&] {
    require(t, "table");
    require(dir, "dir");
    sketchls::emit_tables(t->table, format_of(format), dir);
  });
}

int sls_write_leverage(const sls_config* c, int format, const char* dir) {
  return guarded([&] {
    require(c, "config");
    require(dir, "dir");
    const auto fmt = format_of(format);
    sketchls::ensure_writable_dir(dir);
    sketchls::write_leverage_profiles(sketchls::leverage_records(c->config), fmt, dir);
  });
}

int sls_check_bounds(const sls_config* c, unsigned threads, const char* dir,
                     size_t* violations) {
  return guarded([&] {
    require(c, "config");
    require(dir, "dir");
    sketchls::ensure_writable_dir(dir);
    const auto rates = sketchls::check_bounds(c->config, threads);
    std::size_t bad = 0;
    for (const auto& r : rates)
      if (r.bound_name.rfind("lemma2_", 0) == 0)
        bad += static_cast<std::size_t>(r.evaluated - r.satisfied);
    const std::string csv = sketchls::bound_rates_csv(rates);
    const auto path = std::filesystem::path(dir) / "bounds.csv";
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) sketchls::throw_io("cannot open '" + path.string() + "' for writing");
    const bool ok = std::fwrite(csv.data(), 1, csv.size(), f) == csv.size();
    if (std::fclose(f) != 0 || !ok) sketchls::throw_io("write failed for '" + path.string() + "'");
    if (violations) *violations = bad;
  });
}

} // extern "C"
