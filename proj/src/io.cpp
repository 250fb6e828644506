#include "tropfact/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tropfact {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool is_nan_token(std::string_view s) {
  if (s.size() != 3) return false;
  return (s[0] == 'n' || s[0] == 'N') && (s[1] == 'a' || s[1] == 'A') &&
         (s[2] == 'n' || s[2] == 'N');
}

}  // namespace

MaskedMatrix parse_csv(std::string_view text, bool has_header) {
  std::vector<double> values;
  std::vector<std::uint8_t> mask;
  std::size_t cols = 0, rows = 0, line_no = 0;
  bool header_skipped = !has_header;

  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (trim(line).empty()) continue;
    if (!header_skipped) {
      header_skipped = true;
      continue;
    }
    std::size_t fields = 0;
    while (true) {
      const auto comma = line.find(',');
      const std::string_view field = trim(line.substr(0, comma));
      if (field.empty() || is_nan_token(field)) {
        values.push_back(0.0);
        mask.push_back(0);
      } else {
        double x = 0.0;
        const char* begin = field.data();
        const char* end = field.data() + field.size();
        if (*begin == '+') ++begin;
        const auto res = std::from_chars(begin, end, x);
        if (res.ec != std::errc() || res.ptr != end) {
          throw IoError("CSV line " + std::to_string(line_no) + ": cannot parse '" +
                        std::string(field) + "'");
        }
        if (!std::isfinite(x)) {
          throw IoError("CSV line " + std::to_string(line_no) + ": non-finite value '" +
                        std::string(field) + "'");
        }
        values.push_back(x);
        mask.push_back(1);
      }
      ++fields;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (rows == 0) cols = fields;
    else if (fields != cols) {
      throw IoError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                    " fields, found " + std::to_string(fields));
    }
    ++rows;
  }
  if (rows == 0) throw IoError("CSV contains no data rows");
  return MaskedMatrix(Matrix(rows, cols, std::move(values)), std::move(mask));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

MaskedMatrix read_csv(const std::filesystem::path& path, bool has_header) {
  return parse_csv(read_text(path), has_header);
}

void write_csv(const std::filesystem::path& path, const MaskedMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      if (m.given(i, j)) out += format_double(m(i, j));
    }
    out += '\n';
  }
  write_text(path, out);
}

void write_csv(const std::filesystem::path& path, const Matrix& m) {
  write_csv(path, MaskedMatrix(m));
}

void write_trajectory_jsonl(const std::filesystem::path& path, const Trajectory& traj,
                            bool include_wall_time) {
  std::string out;
  for (const Sample& s : traj.samples) {
    ordered_json j;
    if (include_wall_time) j["t_seconds"] = s.wall_seconds;
    j["sweep"] = s.sweeps;
    j["b_norm_error"] = s.error;
    out += j.dump();
    out += '\n';
  }
  write_text(path, out);
}

Trajectory read_trajectory_jsonl(const std::filesystem::path& path, BudgetClock clock,
                                 double budget) {
  Trajectory traj;
  traj.clock = clock;
  traj.budget = budget;
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      Sample s;
      s.error = j.at("b_norm_error").get<double>();
      s.wall_seconds = j.value("t_seconds", 0.0);
      s.sweeps = j.value("sweep", 0.0);
      const char* needed = clock == BudgetClock::Sweeps ? "sweep" : "t_seconds";
      if (!j.contains(needed)) throw IoError(std::string("missing field ") + needed);
      traj.samples.push_back(s);
    } catch (const std::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (traj.samples.empty()) throw IoError(path.string() + ": empty trajectory");
  return traj;
}

ordered_json to_json(const FitConfig& config) {
  ordered_json j;
  j["rank"] = config.rank;
  if (config.budget.sweeps) j["budget_sweeps"] = *config.budget.sweeps;
  if (config.budget.seconds) j["budget_seconds"] = *config.budget.seconds;
  j["seed"] = config.seed;
  j["epsilon_rel"] = config.epsilon_rel;
  j["acol_q"] = config.acol_q;
  return j;
}

FitConfig fit_config_from_json(const json& j) {
  FitConfig c;
  c.rank = j.value("rank", c.rank);
  if (j.contains("budget_sweeps") && !j["budget_sweeps"].is_null())
    c.budget.sweeps = j["budget_sweeps"].get<std::size_t>();
  if (j.contains("budget_seconds") && !j["budget_seconds"].is_null())
    c.budget.seconds = j["budget_seconds"].get<double>();
  c.seed = j.value("seed", c.seed);
  c.epsilon_rel = j.value("epsilon_rel", c.epsilon_rel);
  c.acol_q = j.value("acol_q", c.acol_q);
  return c;
}

void write_fit_outputs(const std::filesystem::path& dir, const FitResult& result,
                       const MethodSpec& method, const FitConfig& config) {
  std::filesystem::create_directories(dir);
  write_csv(dir / "U.csv", result.factors.u);
  write_csv(dir / "V.csv", result.factors.v);
  write_trajectory_jsonl(dir / "trajectory.jsonl", result.trajectory);

  ordered_json side;
  side["method"] = method.name();
  side["config"] = to_json(config);
  side["orientation"] = {{"transposed", result.factors.transposed},
                         {"row_permutation", result.factors.row_perm.forward()},
                         {"col_permutation", result.factors.col_perm.forward()}};
  side["final_error"] = result.final_error;
  side["initial_error"] = result.trajectory.init_error();
  side["sweeps"] = result.sweeps;
  side["converged"] = result.converged;
  side["trials"] = result.counters.trials;
  side["accepted"] = result.counters.accepted;
  write_text(dir / "fit.json", side.dump(2) + "\n");
}

ordered_json to_json(const SynthSpec& spec) {
  ordered_json j;
  j["m"] = spec.m;
  j["n"] = spec.n;
  j["rank"] = spec.true_rank;
  j["lambda"] = spec.lambda;
  j["seed"] = spec.seed;
  j["mask_fraction"] = spec.mask_fraction;
  return j;
}

SynthSpec synth_spec_from_json(const json& j) {
  SynthSpec s;
  s.m = j.value("m", s.m);
  s.n = j.value("n", s.n);
  s.true_rank = j.value("rank", s.true_rank);
  s.lambda = j.value("lambda", s.lambda);
  s.seed = j.value("seed", s.seed);
  s.mask_fraction = j.value("mask_fraction", s.mask_fraction);
  s.validate();
  return s;
}

void write_dataset(const std::filesystem::path& dir, const SynthSpec& spec, const Mixture& mix,
                   const MaskedSplit& split) {
  std::filesystem::create_directories(dir);
  write_csv(dir / "train.csv", split.train);
  write_csv(dir / "full.csv", mix.full);
  write_csv(dir / "A.csv", mix.a);
  write_csv(dir / "B.csv", mix.b);
  ordered_json side;
  side["spec"] = to_json(spec);
  json coords = json::array();
  for (const auto& [i, j] : split.test_coordinates()) coords.push_back({i, j});
  side["test_mask"] = coords;
  write_text(dir / "dataset.json", side.dump() + "\n");
}

}  // namespace tropfact
