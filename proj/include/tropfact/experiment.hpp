#pragma once

// Config-driven evaluation pipeline behind the command line tool: dataset
// loading, budgeted runs, NE grids, final-factor metrics, rankings and SVG
// reports.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tropfact/datagen.hpp"
#include "tropfact/factor_engine.hpp"
#include "tropfact/matrix.hpp"

namespace tropfact {

struct DatasetSource {
  std::string name;
  std::optional<SynthSpec> synthetic;
  std::filesystem::path csv;        // CSV matrix; masked at load time
  bool csv_header = false;
  std::filesystem::path generated;  // directory written by `gen`
};

/// Trajectory produced outside this tool (e.g. another factorization
/// method), compared on the same NE grid. A method named STMF serves as the
/// baseline.
struct ExternalTrajectory {
  std::string method;
  std::string dataset;
  std::size_t repeat = 0;
  std::filesystem::path path;
};

struct ExperimentConfig {
  std::vector<DatasetSource> datasets;
  std::vector<std::string> methods;
  std::vector<ExternalTrajectory> external;
  std::size_t rank = 3;
  Budget budget;  // unset: 100 s per run, 600 s when a dataset exceeds 10^6 entries
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  double mask_fraction = 0.2;
  double epsilon_rel = 1e-8;
  std::size_t acol_q = 5;
  std::size_t dc_cap = 2000;
  std::string dc_mask = "test";  // test | train | all
  double grid_step = 1.0;
  std::size_t bootstrap_resamples = 1000;
  bool compute_ne = true;
  bool serial = false;
  std::size_t workers = 0;  // 0: hardware threads - 1
  std::filesystem::path out = "results";

  /// Throws std::invalid_argument on an inconsistent config.
  void validate() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ExperimentConfig& config);

struct LoadedDataset {
  std::string name;
  MaskedMatrix train;
  Matrix truth;                       // values at train and test positions
  std::vector<std::uint8_t> test_mask;
};

/// Expands `count` synthetic entries into individual sources. Synthetic
/// entries without their own mask_fraction use the default.
std::vector<DatasetSource> expand_datasets(const nlohmann::json& list,
                                           double default_mask_fraction);
LoadedDataset load_dataset(const DatasetSource& src, double mask_fraction, std::uint64_t seed);

/// Runs every dataset x method x repeat, writes the bundle under config.out
/// and returns the results document. Byte-identical across invocations when
/// the budget is in sweeps.
nlohmann::ordered_json run_experiment(const ExperimentConfig& config);

/// Rank report from a results document: per criterion the rank table,
/// average ranks, Nemenyi CD and bootstrap intervals of the mean rank.
nlohmann::ordered_json rank_report(const nlohmann::json& results, std::uint64_t seed,
                                   std::size_t resamples);
std::string rank_report_text(const nlohmann::json& report);

/// Writes ranks.json, ranks.txt and one CD diagram per criterion. Returns the
/// number of files written.
std::size_t write_rank_outputs(const std::filesystem::path& bundle,
                               const std::filesystem::path& out_dir);
/// One NE-vs-time SVG per dataset and one CD SVG per ranking criterion.
/// A bundle without results.json produces nothing.
std::size_t write_plots(const std::filesystem::path& bundle, const std::filesystem::path& out_dir);

std::string ne_plot_svg(const nlohmann::json& dataset_result, const std::string& clock);
std::string cd_diagram_svg(const std::vector<std::string>& methods,
                           const std::vector<double>& average_ranks, double cd,
                           const std::string& title);

}  // namespace tropfact
