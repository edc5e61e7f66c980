#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bkgarch/bahadur.hpp"
#include "bkgarch/garch.hpp"
#include "bkgarch/marginal.hpp"

namespace bkgarch {

struct MarginalSettings {
  std::size_t draws = kDefaultMarginalDraws;
  std::size_t gap = kDefaultMarginalGap;
  std::optional<std::uint64_t> seed;  // derived from the master seed when unset
};

struct ExperimentConfig {
  GarchParams params;
  std::string innovation_family = "gaussian";
  double innovation_df = 0.0;
  std::vector<std::size_t> n_grid;
  std::size_t replications = 1;
  std::uint64_t master_seed = 1;
  Interval interval;
  std::size_t burn_in = kDefaultBurnIn;
  MarginalSettings marginal;
  std::filesystem::path output_dir;
  std::size_t threads = 1;

  /// Throws InvalidArgument on any violated invariant.
  void validate() const;
  InnovationModel innovation() const;
  std::uint64_t marginal_seed() const;
};

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "BKGARCH_OUTPUT_DIR";

/// Reads an INI-style config with sections [garch], [innovation],
/// [experiment], [marginal] and [output]. Unknown sections or keys are errors.
ExperimentConfig load_config(const std::filesystem::path& file);

/// The config rendered back in the same INI format.
std::string config_to_ini(const ExperimentConfig& config);

/// Seed of cell (n, rep). rep = -1 is reserved for the marginal model.
std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t n, std::int64_t rep);

struct ResultRow {
  std::size_t rep = 0;
  BkResult result;
};

/// One replication: a fresh path of length n, scored against the marginal.
ResultRow run_cell(const ExperimentConfig& config, const MarginalModel& marginal, std::size_t n,
                   std::size_t rep);

struct ExperimentResult {
  std::vector<ResultRow> rows;  // canonical (n, rep) order
  nlohmann::json summary;
  ExperimentConfig config;
  double wall_seconds = 0.0;
  std::filesystem::path csv_path;
};

inline const char* const kCsvHeader =
    "n,rep,seed,r_uniform,r_general,sup_beta,oscillation,lil,r_general_full";

std::string format_csv_row(const ResultRow& row);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& file);

/// Runs every (n, rep) cell on `threads` workers and writes
/// results.csv, summary.json and run_info.json into the output directory.
/// Rows are written in canonical order whatever the scheduling.
/// A prebuilt marginal may be passed to skip the build.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const MarginalModel* prebuilt = nullptr);

/// Summary of result rows: per-n quartiles of every statistic, ratio tables
/// and log-log rate fits (when at least three n values are present).
nlohmann::json summarize(const std::vector<ResultRow>& rows);
nlohmann::json summarize(const std::filesystem::path& csv_file);

/// Writes `contents` to `file` through a temporary sibling and a rename.
void write_file_atomic(const std::filesystem::path& file, const std::string& contents);

}  // namespace bkgarch
