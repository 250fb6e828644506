#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tropfact/datagen.hpp"
#include "tropfact/factor_engine.hpp"
#include "tropfact/matrix.hpp"
#include "tropfact/strategies.hpp"

namespace tropfact {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);

/// Row-major CSV with '.' decimals. Empty fields and `nan` (any case) are
/// missing entries. Throws IoError on malformed input.
MaskedMatrix parse_csv(std::string_view text, bool has_header);
MaskedMatrix read_csv(const std::filesystem::path& path, bool has_header);
/// Missing entries are written as empty fields.
void write_csv(const std::filesystem::path& path, const MaskedMatrix& m);
void write_csv(const std::filesystem::path& path, const Matrix& m);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// One JSON object per sample: {"t_seconds", "sweep", "b_norm_error"}.
/// Without wall times the t_seconds field is omitted so the file is
/// reproducible.
void write_trajectory_jsonl(const std::filesystem::path& path, const Trajectory& traj,
                            bool include_wall_time = true);
/// Reads the same format; `sweep` or `t_seconds` may be absent when the clock
/// does not need it.
Trajectory read_trajectory_jsonl(const std::filesystem::path& path, BudgetClock clock,
                                 double budget);

nlohmann::ordered_json to_json(const FitConfig& config);
FitConfig fit_config_from_json(const nlohmann::json& j);

/// U.csv, V.csv, trajectory.jsonl and fit.json (orientation, permutations,
/// effective config, summary).
void write_fit_outputs(const std::filesystem::path& dir, const FitResult& result,
                       const MethodSpec& method, const FitConfig& config);

nlohmann::ordered_json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

/// train.csv, full.csv, A.csv, B.csv and dataset.json (spec, seed, test-mask
/// coordinates).
void write_dataset(const std::filesystem::path& dir, const SynthSpec& spec, const Mixture& mix,
                   const MaskedSplit& split);

}  // namespace tropfact
