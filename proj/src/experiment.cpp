#include "sketchls/experiment.hpp"

#include "sketchls/error.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace sketchls {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string nu_label(double nu) {
  if (std::isinf(nu)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", nu);
  return buf;
}

json real_to_json(double v) {
  if (std::isfinite(v)) return v;
  return format_real(v);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_io("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw_io("write failed for '" + path.string() + "'");
}

double parse_real(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return kNaN;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw_invalid("malformed number '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw_invalid("malformed unsigned integer '" + s + "'");
  return static_cast<std::uint64_t>(v);
}

SketchKind kind_from_json(const json& j) {
  if (j.is_string()) return SketchKind::of(parse_sketch_tag(j.get<std::string>()));
  if (!j.is_object() || !j.contains("tag"))
    throw_invalid("config: sketch_kinds entries must be names or objects with a \"tag\"");
  SketchKind k = SketchKind::of(parse_sketch_tag(j.at("tag").get<std::string>()));
  for (const auto& [key, value] : j.items()) {
    if (key == "tag") continue;
    if (key == "theta") k.theta = value.get<double>();
    else if (key == "rescale_uniform") k.rescale_uniform = value.get<bool>();
    else if (key == "approximate_leverage") k.approximate_leverage = value.get<bool>();
    else if (key == "mixture_q") {
      const auto q = value.get<std::vector<double>>();
      k.mixture_q = Eigen::Map<const Vector>(q.data(), static_cast<Index>(q.size()));
    } else {
      throw_invalid("config: unknown sketch kind field '" + key + "'");
    }
  }
  k.validate();
  return k;
}

json kind_to_json(const SketchKind& k) {
  json j;
  j["tag"] = std::string(to_string(k.tag));
  j["theta"] = k.theta;
  if (k.tag == SketchTag::uniform) j["rescale_uniform"] = k.rescale_uniform;
  if (k.approximate_leverage) j["approximate_leverage"] = true;
  if (k.mixture_q) j["mixture_q"] = std::vector<double>(k.mixture_q->data(), k.mixture_q->data() + k.mixture_q->size());
  return j;
}

} // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  for (SketchTag t : {SketchTag::leverage_rescaled, SketchTag::leverage_unrescaled,
                      SketchTag::uniform, SketchTag::shrinkage_rescaled,
                      SketchTag::gaussian_projection, SketchTag::hadamard})
    c.sketch_kinds.push_back(SketchKind::of(t));
  return c;
}

void ExperimentConfig::validate() const {
  if (p < 1 || n <= p) throw_invalid("config: requires n > p >= 1");
  if (nu_list.empty()) throw_invalid("config: nu_list must be non-empty");
  if (r_list.empty()) throw_invalid("config: r_list must be non-empty");
  if (sketch_kinds.empty()) throw_invalid("config: sketch_kinds must be non-empty");
  for (double nu : nu_list)
    if (!(nu > 0.0)) throw_invalid("config: every nu must be positive");
  for (Index r : r_list)
    if (r < 1) throw_invalid("config: every r must be >= 1");
  if (replications < 1) throw_invalid("config: replications must be >= 1");
  if (!(std::abs(ar_rho) < 1.0)) throw_invalid("config: |ar_rho| must be < 1");
  for (const auto& k : sketch_kinds) {
    k.validate();
    if (k.mixture_q && k.mixture_q->size() != n)
      throw_invalid("config: mixture_q length must equal n");
  }
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw_invalid("config: top level must be a JSON object");
  ExperimentConfig c = ExperimentConfig::defaults();
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "n") c.n = value.get<Index>();
      else if (key == "p") c.p = value.get<Index>();
      else if (key == "nu_list") {
        c.nu_list.clear();
        for (const auto& v : value) {
          if (v.is_string() && v.get<std::string>() == "inf")
            c.nu_list.push_back(std::numeric_limits<double>::infinity());
          else
            c.nu_list.push_back(v.get<double>());
        }
      } else if (key == "r_list") c.r_list = value.get<std::vector<Index>>();
      else if (key == "sketch_kinds") {
        c.sketch_kinds.clear();
        for (const auto& v : value) c.sketch_kinds.push_back(kind_from_json(v));
      } else if (key == "replications") c.replications = value.get<Index>();
      else if (key == "master_seed") c.master_seed = value.get<std::uint64_t>();
      else if (key == "ar_rho") c.ar_rho = value.get<double>();
      else if (key == "mc_mode") c.mc_mode = value.get<bool>();
      else if (key == "output_dir") c.output_dir = value.get<std::string>();
      else throw_invalid("config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw_invalid(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["n"] = c.n;
  j["p"] = c.p;
  json nus = json::array();
  for (double nu : c.nu_list) nus.push_back(real_to_json(nu));
  j["nu_list"] = nus;
  j["r_list"] = c.r_list;
  json kinds = json::array();
  for (const auto& k : c.sketch_kinds) kinds.push_back(kind_to_json(k));
  j["sketch_kinds"] = kinds;
  j["replications"] = c.replications;
  j["master_seed"] = c.master_seed;
  j["ar_rho"] = c.ar_rho;
  j["mc_mode"] = c.mc_mode;
  j["output_dir"] = c.output_dir;
  return j;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot read config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw_invalid("config '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

void apply_env_overrides(ExperimentConfig& config) {
  if (const char* env = std::getenv("BENCH_SEED"); env && *env) {
    try {
      config.master_seed = parse_u64(env);
    } catch (const Error&) {
      throw_invalid(std::string("BENCH_SEED is not a decimal 64-bit integer: '") + env + "'");
    }
  }
}

std::uint64_t design_seed(std::uint64_t master_seed, std::size_t nu_index) {
  const std::uint64_t words[] = {master_seed, 0xDE5167ULL, nu_index};
  return hash_words(words);
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t nu_index,
                               std::size_t r_index, std::size_t kind_index,
                               Index replication) {
  const std::uint64_t words[] = {master_seed, nu_index, r_index, kind_index,
                                 static_cast<std::uint64_t>(replication)};
  return hash_words(words);
}

LinearModelInstance cell_design(const ExperimentConfig& config, std::size_t nu_index) {
  SyntheticSpec spec;
  spec.n = config.n;
  spec.p = config.p;
  spec.nu = config.nu_list.at(nu_index);
  spec.ar_rho = config.ar_rho;
  spec.seed = design_seed(config.master_seed, nu_index);
  RngStream rng(spec.seed, 0);
  return generate_design(spec, rng);
}

void ensure_writable_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw_io("cannot create output directory '" + dir.string() + "': " + ec.message());
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw_io("output directory '" + dir.string() + "' is not writable");
  }
  fs::remove(probe, ec);
}

namespace {

// Per-nu state shared by all cells of that nu.
struct NuCell {
  DesignFactors design;
  Vector beta_true;
  Vector lev;
  std::vector<Vector> kind_lev; // approximate scores where requested
};

std::vector<NuCell> prepare_cells(const ExperimentConfig& config, unsigned threads) {
  std::vector<NuCell> cells(config.nu_list.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    LinearModelInstance inst = cell_design(config, i);
    NuCell& cell = cells[i];
    cell.design = factor_design(inst.x);
    cell.beta_true = std::move(inst.beta_true);
    cell.lev = leverage_scores_from_basis(cell.design.u);
    cell.kind_lev.resize(config.sketch_kinds.size());
    for (std::size_t k = 0; k < config.sketch_kinds.size(); ++k) {
      const SketchKind& kind = config.sketch_kinds[k];
      if (kind.needs_leverage() && kind.approximate_leverage) {
        RngStream rng(design_seed(config.master_seed, i), 1 + k);
        cell.kind_lev[k] = approx_leverage_scores(
            cell.design.x, default_approx_sketch_rows(config.p), rng);
      } else {
        cell.kind_lev[k] = cell.lev;
      }
    }
  });
  return cells;
}

struct TaskIndex {
  std::size_t nu, r, kind;
  Index rep;
};

TaskIndex decode_task(const ExperimentConfig& c, std::size_t t) {
  const auto reps = static_cast<std::size_t>(c.replications);
  TaskIndex idx{};
  idx.rep = static_cast<Index>(t % reps);
  t /= reps;
  idx.kind = t % c.sketch_kinds.size();
  t /= c.sketch_kinds.size();
  idx.r = t % c.r_list.size();
  idx.nu = t / c.r_list.size();
  return idx;
}

std::size_t task_count(const ExperimentConfig& c) {
  return c.nu_list.size() * c.r_list.size() * c.sketch_kinds.size() *
         static_cast<std::size_t>(c.replications);
}

} // namespace

ResultTable run_experiment(const ExperimentConfig& config, unsigned threads) {
  config.validate();
  if (!config.output_dir.empty()) ensure_writable_dir(config.output_dir);

  const std::vector<NuCell> cells = prepare_cells(config, threads);
  const std::size_t total = task_count(config);

  ResultTable table;
  table.config = config;
  table.rows.resize(total);
  table.moments.resize(total);

  const double pd = static_cast<double>(config.p);
  const double resid_dof = static_cast<double>(config.n - config.p);

  parallel_for(total, threads, [&](std::size_t t) {
    const TaskIndex idx = decode_task(config, t);
    const NuCell& cell = cells[idx.nu];
    const SketchKind& kind = config.sketch_kinds[idx.kind];
    const Index r = config.r_list[idx.r];

    ResultRow row;
    row.nu = config.nu_list[idx.nu];
    row.r = r;
    row.sketch = kind.label();
    row.replication = idx.rep;
    row.seed_used = replication_seed(config.master_seed, idx.nu, idx.r, idx.kind, idx.rep);

    RngStream rng(row.seed_used, 1);
    const SketchDraw draw = draw_sketch(kind, cell.kind_lev[idx.kind], r, config.n, rng);
    const DrawEvaluation eval = evaluate_draw(cell.design, draw, cell.beta_true);
    row.alpha_min = eval.constants.alpha_min;
    row.beta_nullspace = eval.constants.beta_nullspace;
    row.gamma_frobenius = eval.constants.gamma_frobenius;

    RowMoments mom;
    if (config.mc_mode) {
      const ReplicationSample s = noise_replication(cell.design, draw, cell.beta_true, rng);
      row.rank_preserved = s.rank_preserved;
      row.c_pe = s.pe_num / s.pe_den;
      row.c_re = s.re_num / s.re_den;
      row.c_wc = s.wc_probe;
      mom = RowMoments{s.pe_num, s.pe_den, s.re_num, s.re_den};
    } else {
      row.rank_preserved = eval.report.rank_preserved;
      row.c_pe = eval.report.c_pe;
      row.c_re = eval.report.c_re;
      row.c_wc = eval.report.c_wc;
      // expected numerators over exact denominators p and n - p
      mom = RowMoments{row.c_pe * pd, pd, row.c_re * resid_dof, resid_dof};
    }
    table.rows[t] = std::move(row);
    table.moments[t] = mom;
  });

  table.aggregates = aggregate_rows(table.rows, table.moments, config.replications);
  table.leverage.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    LeverageRecord rec;
    rec.nu = config.nu_list[i];
    rec.design_seed = design_seed(config.master_seed, i);
    rec.profile = leverage_profile(cells[i].design.x);
    rec.heavy_hitter_k90 = heavy_hitter_k(cells[i].lev, 0.9);
    table.leverage.push_back(std::move(rec));
  }
  return table;
}

std::vector<AggregateRow> aggregate_rows(const std::vector<ResultRow>& rows,
                                         const std::vector<RowMoments>& moments,
                                         Index replications) {
  if (rows.size() != moments.size())
    throw_invalid("aggregate_rows: rows and moments differ in length");
  if (replications < 1 || rows.size() % static_cast<std::size_t>(replications) != 0)
    throw_invalid("aggregate_rows: row count is not a multiple of replications");

  std::vector<AggregateRow> out;
  const auto reps = static_cast<std::size_t>(replications);
  for (std::size_t start = 0; start < rows.size(); start += reps) {
    AggregateRow agg;
    agg.nu = rows[start].nu;
    agg.r = rows[start].r;
    agg.sketch = rows[start].sketch;
    agg.replications = replications;

    // sequential summation in replication order: deterministic for any
    // worker count
    double pe_num = 0, pe_den = 0, re_num = 0, re_den = 0, wc = 0;
    double alpha = 0, beta = 0, gamma = 0;
    std::vector<double> wcs, pes, res;
    for (std::size_t i = start; i < start + reps; ++i) {
      const ResultRow& row = rows[i];
      if (!std::isfinite(row.c_wc)) {
        ++agg.rank_failures;
        continue;
      }
      pe_num += moments[i].pe_num;
      pe_den += moments[i].pe_den;
      re_num += moments[i].re_num;
      re_den += moments[i].re_den;
      wc += row.c_wc;
      alpha += row.alpha_min;
      beta += row.beta_nullspace;
      gamma += row.gamma_frobenius;
      wcs.push_back(row.c_wc);
      pes.push_back(row.c_pe);
      res.push_back(row.c_re);
    }
    const auto kept = static_cast<double>(wcs.size());
    agg.rank_failure_rate = static_cast<double>(agg.rank_failures) / static_cast<double>(reps);
    if (wcs.empty()) {
      agg.c_wc = agg.c_pe = agg.c_re = kNaN;
      agg.alpha_min = agg.beta_nullspace = agg.gamma_frobenius = kNaN;
    } else {
      agg.c_wc = wc / kept;
      agg.c_pe = pe_num / pe_den;
      agg.c_re = re_num / re_den;
      agg.alpha_min = alpha / kept;
      agg.beta_nullspace = beta / kept;
      agg.gamma_frobenius = gamma / kept;
    }
    agg.c_wc_median = median(std::move(wcs));
    agg.c_pe_median = median(std::move(pes));
    agg.c_re_median = median(std::move(res));
    out.push_back(std::move(agg));
  }
  return out;
}

std::vector<LeverageRecord> leverage_records(const ExperimentConfig& config) {
  config.validate();
  std::vector<LeverageRecord> out;
  for (std::size_t i = 0; i < config.nu_list.size(); ++i) {
    const LinearModelInstance inst = cell_design(config, i);
    LeverageRecord rec;
    rec.nu = config.nu_list[i];
    rec.design_seed = design_seed(config.master_seed, i);
    rec.profile = leverage_profile(inst.x);
    rec.heavy_hitter_k90 = heavy_hitter_k(rec.profile.sorted_scores, 0.9);
    out.push_back(std::move(rec));
  }
  return out;
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out =
      "nu,r,sketch,replication,c_wc,c_pe,c_re,rank_preserved,alpha_min,"
      "beta_nullspace,gamma_frobenius,seed_used\n";
  for (const auto& row : rows) {
    out += format_real(row.nu) + ',' + std::to_string(row.r) + ',' + row.sketch + ',' +
           std::to_string(row.replication) + ',' + format_real(row.c_wc) + ',' +
           format_real(row.c_pe) + ',' + format_real(row.c_re) + ',' +
           (row.rank_preserved ? "1" : "0") + ',' + format_real(row.alpha_min) + ',' +
           format_real(row.beta_nullspace) + ',' + format_real(row.gamma_frobenius) + ',' +
           std::to_string(row.seed_used) + '\n';
  }
  return out;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::string out =
      "nu,r,sketch,replications,rank_failures,rank_failure_rate,c_wc,c_pe,c_re,"
      "c_wc_median,c_pe_median,c_re_median,alpha_min,beta_nullspace,gamma_frobenius\n";
  for (const auto& a : rows) {
    out += format_real(a.nu) + ',' + std::to_string(a.r) + ',' + a.sketch + ',' +
           std::to_string(a.replications) + ',' + std::to_string(a.rank_failures) + ',' +
           format_real(a.rank_failure_rate) + ',' + format_real(a.c_wc) + ',' +
           format_real(a.c_pe) + ',' + format_real(a.c_re) + ',' +
           format_real(a.c_wc_median) + ',' + format_real(a.c_pe_median) + ',' +
           format_real(a.c_re_median) + ',' + format_real(a.alpha_min) + ',' +
           format_real(a.beta_nullspace) + ',' + format_real(a.gamma_frobenius) + '\n';
  }
  return out;
}

std::vector<ResultRow> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("nu,r,sketch,replication,", 0) != 0)
    throw_invalid("results csv: missing or unexpected header");
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 12)
      throw_invalid("results csv line " + std::to_string(line_no) + ": expected 12 fields");
    ResultRow row;
    row.nu = parse_real(f[0]);
    row.r = static_cast<Index>(parse_u64(f[1]));
    row.sketch = f[2];
    row.replication = static_cast<Index>(parse_u64(f[3]));
    row.c_wc = parse_real(f[4]);
    row.c_pe = parse_real(f[5]);
    row.c_re = parse_real(f[6]);
    row.rank_preserved = f[7] == "1";
    row.alpha_min = parse_real(f[8]);
    row.beta_nullspace = parse_real(f[9]);
    row.gamma_frobenius = parse_real(f[10]);
    row.seed_used = parse_u64(f[11]);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_leverage_profiles(const std::vector<LeverageRecord>& records,
                             TableFormat format, const fs::path& dir) {
  ensure_writable_dir(dir);
  std::string summary = "nu,design_seed,heavy_hitter_k90\n";
  for (const auto& rec : records) {
    const std::string stem = "leverage_profile_nu" + nu_label(rec.nu);
    const auto& prof = rec.profile;
    if (format == TableFormat::csv) {
      std::string out = "index,sorted_score,cumulative\n";
      for (Index i = 0; i < prof.sorted_scores.size(); ++i)
        out += std::to_string(i) + ',' + format_real(prof.sorted_scores(i)) + ',' +
               format_real(prof.cumulative(i)) + '\n';
      write_file(dir / (stem + ".csv"), out);
    } else {
      json j;
      j["nu"] = real_to_json(rec.nu);
      j["sorted_score"] = std::vector<double>(prof.sorted_scores.data(), prof.sorted_scores.data() + prof.sorted_scores.size());
      j["cumulative"] = std::vector<double>(prof.cumulative.data(), prof.cumulative.data() + prof.cumulative.size());
      write_file(dir / (stem + ".json"), j.dump(2) + "\n");
    }
    summary += format_real(rec.nu) + ',' + std::to_string(rec.design_seed) + ',' +
               std::to_string(rec.heavy_hitter_k90) + '\n';
  }
  write_file(dir / "leverage_summary.csv", summary);
}

void emit_tables(const ResultTable& table, TableFormat format, const fs::path& dir) {
  if (table.rows.empty()) throw_invalid("emit_tables: empty result table");
  ensure_writable_dir(dir);

  json manifest;
  manifest["config"] = config_to_json(table.config);
  manifest["library_version"] = kLibraryVersion;
  manifest["master_seed"] = table.config.master_seed;
  manifest["mode"] = table.config.mc_mode ? "mc" : "closed";
  manifest["row_count"] = table.rows.size();
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  if (format == TableFormat::csv) {
    write_file(dir / "results.csv", results_csv(table.rows));
    write_file(dir / "aggregate.csv", aggregate_csv(table.aggregates));
  } else {
    json rows = json::array();
    for (const auto& r : table.rows)
      rows.push_back({{"nu", real_to_json(r.nu)}, {"r", r.r}, {"sketch", r.sketch},
                      {"replication", r.replication}, {"c_wc", real_to_json(r.c_wc)},
                      {"c_pe", real_to_json(r.c_pe)}, {"c_re", real_to_json(r.c_re)},
                      {"rank_preserved", r.rank_preserved},
                      {"alpha_min", real_to_json(r.alpha_min)},
                      {"beta_nullspace", real_to_json(r.beta_nullspace)},
                      {"gamma_frobenius", real_to_json(r.gamma_frobenius)},
                      {"seed_used", r.seed_used}});
    json aggs = json::array();
    for (const auto& a : table.aggregates)
      aggs.push_back({{"nu", real_to_json(a.nu)}, {"r", a.r}, {"sketch", a.sketch},
                      {"replications", a.replications}, {"rank_failures", a.rank_failures},
                      {"rank_failure_rate", real_to_json(a.rank_failure_rate)},
                      {"c_wc", real_to_json(a.c_wc)}, {"c_pe", real_to_json(a.c_pe)},
                      {"c_re", real_to_json(a.c_re)},
                      {"c_wc_median", real_to_json(a.c_wc_median)},
                      {"c_pe_median", real_to_json(a.c_pe_median)},
                      {"c_re_median", real_to_json(a.c_re_median)},
                      {"alpha_min", real_to_json(a.alpha_min)},
                      {"beta_nullspace", real_to_json(a.beta_nullspace)},
                      {"gamma_frobenius", real_to_json(a.gamma_frobenius)}});
    write_file(dir / "results.json", rows.dump(1) + "\n");
    write_file(dir / "aggregate.json", aggs.dump(1) + "\n");
  }
  write_leverage_profiles(table.leverage, format, dir);
}

std::vector<BoundRate> check_bounds(const ExperimentConfig& config, unsigned threads) {
  config.validate();
  const std::vector<NuCell> cells = prepare_cells(config, threads);
  const std::size_t ncells = config.nu_list.size() * config.r_list.size() * config.sketch_kinds.size();
  const auto reps = static_cast<std::size_t>(config.replications);

  std::vector<std::vector<BoundRate>> per_cell(ncells);
  parallel_for(ncells, threads, [&](std::size_t c) {
    const std::size_t kind_i = c % config.sketch_kinds.size();
    const std::size_t r_i = (c / config.sketch_kinds.size()) % config.r_list.size();
    const std::size_t nu_i = c / (config.sketch_kinds.size() * config.r_list.size());
    const NuCell& cell = cells[nu_i];
    const SketchKind& kind = config.sketch_kinds[kind_i];
    const Index r = config.r_list[r_i];

    std::vector<BoundTemplate> templates;
    if (kind.tag != SketchTag::uniform && kind.tag != SketchTag::identity) {
      std::optional<Index> k;
      if (kind.tag == SketchTag::leverage_unrescaled) k = heavy_hitter_k(cell.lev, 0.9);
      templates = theorem_bound(kind, config.n, config.p, r, k);
    }

    auto make_rate = [&](const std::string& name, double rhs, double prob) {
      BoundRate b;
      b.nu = config.nu_list[nu_i];
      b.r = r;
      b.sketch = kind.label();
      b.bound_name = name;
      b.rhs = rhs;
      b.nominal_probability = prob;
      b.draws = config.replications;
      return b;
    };
    std::vector<BoundRate> rates;
    for (const char* name : {"lemma2_wc", "lemma2_pe", "lemma2_re"})
      rates.push_back(make_rate(name, kNaN, 1.0));
    for (const auto& t : templates)
      rates.push_back(make_rate(t.bound_name, t.rhs, t.nominal_probability));

    for (std::size_t rep = 0; rep < reps; ++rep) {
      RngStream rng(replication_seed(config.master_seed, nu_i, r_i, kind_i,
                                     static_cast<Index>(rep)), 1);
      const SketchDraw draw = draw_sketch(kind, cell.kind_lev[kind_i], r, config.n, rng);
      const DrawEvaluation eval = evaluate_draw(cell.design, draw, cell.beta_true);
      if (eval.report.rank_preserved) {
        const auto checks = verify_lemma2(eval.constants, eval.report, config.p, config.n);
        for (std::size_t i = 0; i < checks.size(); ++i) {
          if (checks[i].skipped) continue;
          ++rates[i].evaluated;
          if (checks[i].satisfied) ++rates[i].satisfied;
        }
      }
      for (std::size_t i = 0; i < templates.size(); ++i) {
        BoundRate& rate = rates[3 + i];
        ++rate.evaluated;
        const double obs = observed_value(eval.report, templates[i].criterion);
        if (eval.report.rank_preserved && make_check("", templates[i].rhs, obs).satisfied)
          ++rate.satisfied;
      }
    }
    per_cell[c] = std::move(rates);
  });

  std::vector<BoundRate> out;
  for (auto& v : per_cell)
    for (auto& b : v) out.push_back(std::move(b));
  return out;
}

std::string bound_rates_csv(const std::vector<BoundRate>& rates) {
  std::string out = "nu,r,sketch,bound,rhs,nominal_probability,draws,evaluated,satisfied,rate\n";
  for (const auto& b : rates)
    out += format_real(b.nu) + ',' + std::to_string(b.r) + ',' + b.sketch + ',' +
           b.bound_name + ',' + format_real(b.rhs) + ',' +
           format_real(b.nominal_probability) + ',' + std::to_string(b.draws) + ',' +
           std::to_string(b.evaluated) + ',' + std::to_string(b.satisfied) + ',' +
           format_real(b.rate()) + '\n';
  return out;
}

} // namespace sketchls
