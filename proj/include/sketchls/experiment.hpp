#ifndef SKETCHLS_EXPERIMENT_HPP
#define SKETCHLS_EXPERIMENT_HPP

#include "sketchls/criteria.hpp"
#include "sketchls/datagen.hpp"
#include "sketchls/sketch.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sketchls {

inline constexpr const char* kLibraryVersion = "0.3.0";

struct ExperimentConfig {
  Index n = 1024;
  Index p = 50;
  std::vector<double> nu_list{1.0, 2.0, 10.0};
  std::vector<Index> r_list{80, 90, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
  std::vector<SketchKind> sketch_kinds;
  Index replications = 100;
  std::uint64_t master_seed = 20150101;
  double ar_rho = 0.5;
  bool mc_mode = false;
  std::string output_dir = "results";

  /// Config with the six benchmark sketches (theta = 0.1 for shrinkage).
  static ExperimentConfig defaults();
  void validate() const;
};

/// Keys must match the ExperimentConfig field names; absent keys keep their
/// defaults, unknown keys are rejected. nu_list entries may be numbers or
/// the string "inf"; sketch_kinds entries are names or objects with "tag",
/// "theta", "mixture_q", "rescale_uniform", "approximate_leverage".
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);
/// BENCH_SEED (decimal uint64) overrides master_seed when set.
void apply_env_overrides(ExperimentConfig& config);

struct ResultRow {
  double nu = 0.0;
  Index r = 0;
  std::string sketch;
  Index replication = 0;
  double c_wc = 1.0;
  double c_pe = 1.0;
  double c_re = 1.0;
  bool rank_preserved = true;
  double alpha_min = 0.0;
  double beta_nullspace = 0.0;
  double gamma_frobenius = 0.0;
  std::uint64_t seed_used = 0;

  bool operator==(const ResultRow&) const = default;
};

/// Numerators and denominators behind a row's c_pe and c_re, kept so that
/// aggregates are ratios of means.
struct RowMoments {
  double pe_num = 0.0;
  double pe_den = 1.0;
  double re_num = 0.0;
  double re_den = 1.0;
};

struct AggregateRow {
  double nu = 0.0;
  Index r = 0;
  std::string sketch;
  Index replications = 0;
  Index rank_failures = 0;
  double rank_failure_rate = 0.0;
  // over rank-preserving replications
  double c_wc = 0.0;
  double c_pe = 0.0;
  double c_re = 0.0;
  double c_wc_median = 0.0;
  double c_pe_median = 0.0;
  double c_re_median = 0.0;
  double alpha_min = 0.0;
  double beta_nullspace = 0.0;
  double gamma_frobenius = 0.0;
};

struct LeverageRecord {
  double nu = 0.0;
  std::uint64_t design_seed = 0;
  LeverageProfile profile;
  Index heavy_hitter_k90 = 0;
};

struct ResultTable {
  ExperimentConfig config;
  std::vector<ResultRow> rows;
  std::vector<RowMoments> moments;
  std::vector<AggregateRow> aggregates;
  std::vector<LeverageRecord> leverage;
};

std::uint64_t design_seed(std::uint64_t master_seed, std::size_t nu_index);
std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t nu_index,
                               std::size_t r_index, std::size_t kind_index,
                               Index replication);

/// Design for one nu cell, reproducible from (master_seed, nu_index).
LinearModelInstance cell_design(const ExperimentConfig& config,
                                std::size_t nu_index);

/// Worker count 0 means std::thread::hardware_concurrency(). Output is
/// independent of the worker count. Checks that output_dir is writable
/// before any computation.
ResultTable run_experiment(const ExperimentConfig& config, unsigned threads = 1);

/// Aggregates in (nu, r, kind) order; rows are expected grouped by cell.
std::vector<AggregateRow> aggregate_rows(const std::vector<ResultRow>& rows,
                                         const std::vector<RowMoments>& moments,
                                         Index replications);

std::vector<LeverageRecord> leverage_records(const ExperimentConfig& config);

enum class TableFormat { csv, json };

/// Creates `dir` if needed; throws io errors naming the offending path.
void ensure_writable_dir(const std::filesystem::path& dir);

void emit_tables(const ResultTable& table, TableFormat format,
                 const std::filesystem::path& dir);
void write_leverage_profiles(const std::vector<LeverageRecord>& records,
                             TableFormat format, const std::filesystem::path& dir);

std::string format_real(double v);
std::string results_csv(const std::vector<ResultRow>& rows);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);
std::vector<ResultRow> parse_results_csv(const std::string& text);

/// Satisfaction rate of one bound over the draws of one cell.
struct BoundRate {
  double nu = 0.0;
  Index r = 0;
  std::string sketch;
  std::string bound_name;
  double rhs = 0.0;
  double nominal_probability = 0.0;
  Index draws = 0;
  Index evaluated = 0;
  Index satisfied = 0;

  double rate() const {
    return evaluated > 0 ? static_cast<double>(satisfied) / static_cast<double>(evaluated) : 0.0;
  }
};

/// For every cell: Lemma-2 checks (evaluated on rank-preserving draws) and
/// theorem bounds (a draw counts as satisfying only if it also preserves
/// rank). Kinds with no covering theorem get Lemma-2 rows only.
std::vector<BoundRate> check_bounds(const ExperimentConfig& config,
                                    unsigned threads = 1);
std::string bound_rates_csv(const std::vector<BoundRate>& rates);

} // namespace sketchls

#endif
