#include "tropfact/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <spdlog/spdlog.h>

#include "tropfact/io.hpp"
#include "tropfact/metrics.hpp"
#include "tropfact/strategies.hpp"

namespace tropfact {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0) {
  return splitmix64(splitmix64(splitmix64(base ^ splitmix64(a)) ^ b) ^ c);
}

const char* clock_name(BudgetClock c) {
  return c == BudgetClock::Sweeps ? "sweeps" : "seconds";
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

void ExperimentConfig::validate() const {
  if (datasets.empty()) throw std::invalid_argument("config lists no datasets");
  if (methods.empty()) throw std::invalid_argument("config lists no methods");
  for (const auto& m : methods) parse_method(m);
  if (budget.seconds && !(*budget.seconds > 0.0)) {
    throw std::invalid_argument("wall-clock budget must be positive");
  }
  if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  if (rank < 1) throw std::invalid_argument("rank must be at least 1");
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid_step must be positive");
  if (dc_mask != "test" && dc_mask != "train" && dc_mask != "all") {
    throw std::invalid_argument("dc_mask must be test, train or all");
  }
  if (compute_ne) {
    const bool has_internal = std::any_of(methods.begin(), methods.end(),
                                      [](const std::string& m) { return parse_method(m).baseline; });
    const bool has_external = std::any_of(external.begin(), external.end(), [](const auto& e) {
      return parse_method(e.method).baseline;
    });
    if (!has_internal && !has_external) {
      throw std::invalid_argument(
          "normalized error needs the STMF baseline among the methods or an external STMF "
          "trajectory");
    }
  }
}

std::vector<DatasetSource> expand_datasets(const json& list, double default_mask_fraction) {
  if (!list.is_array()) throw std::invalid_argument("datasets must be an array");
  std::vector<DatasetSource> out;
  std::size_t auto_index = 0;
  for (const json& entry : list) {
    DatasetSource base;
    base.name = entry.value("name", std::string());
    if (entry.contains("synthetic")) {
      json spec_json = entry["synthetic"];
      if (!spec_json.contains("mask_fraction")) spec_json["mask_fraction"] = default_mask_fraction;
      const SynthSpec spec = synth_spec_from_json(spec_json);
      const std::size_t count = entry.value("count", std::size_t{1});
      if (base.name.empty()) base.name = "synthetic" + std::to_string(auto_index);
      for (std::size_t c = 0; c < count; ++c) {
        DatasetSource src = base;
        src.synthetic = spec;
        src.synthetic->seed = spec.seed + c;
        if (count > 1) src.name = base.name + "_" + std::to_string(c);
        out.push_back(std::move(src));
      }
    } else if (entry.contains("csv")) {
      base.csv = entry["csv"].get<std::string>();
      base.csv_header = entry.value("header", false);
      if (base.name.empty()) base.name = base.csv.stem().string();
      out.push_back(std::move(base));
    } else if (entry.contains("generated")) {
      base.generated = entry["generated"].get<std::string>();
      if (base.name.empty()) base.name = base.generated.filename().string();
      out.push_back(std::move(base));
    } else {
      throw std::invalid_argument("dataset entry needs synthetic, csv or generated");
    }
    ++auto_index;
  }
  return out;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  c.mask_fraction = j.value("mask_fraction", c.mask_fraction);
  c.datasets = expand_datasets(j.at("datasets"), c.mask_fraction);
  for (const auto& m : j.at("methods")) c.methods.push_back(m.get<std::string>());
  if (j.contains("external")) {
    for (const auto& e : j["external"]) {
      c.external.push_back({e.at("method").get<std::string>(), e.at("dataset").get<std::string>(),
                            e.value("repeat", std::size_t{0}), e.at("path").get<std::string>()});
    }
  }
  c.rank = j.value("rank", c.rank);
  if (j.contains("budget")) {
    const json& b = j["budget"];
    if (b.contains("sweeps") && !b["sweeps"].is_null()) c.budget.sweeps = b["sweeps"].get<std::size_t>();
    if (b.contains("seconds") && !b["seconds"].is_null()) c.budget.seconds = b["seconds"].get<double>();
  }
  c.repeats = j.value("repeats", c.repeats);
  c.seed = j.value("seed", c.seed);
  c.epsilon_rel = j.value("epsilon_rel", c.epsilon_rel);
  c.acol_q = j.value("acol_q", c.acol_q);
  c.dc_cap = j.value("dc_cap", c.dc_cap);
  c.dc_mask = j.value("dc_mask", c.dc_mask);
  c.grid_step = j.value("grid_step", c.grid_step);
  c.bootstrap_resamples = j.value("bootstrap_resamples", c.bootstrap_resamples);
  c.compute_ne = j.value("compute_ne", c.compute_ne);
  c.serial = j.value("serial", c.serial);
  c.workers = j.value("workers", c.workers);
  c.out = j.value("out", c.out.string());
  return c;
}

ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  ordered_json ds = ordered_json::array();
  for (const auto& d : c.datasets) {
    ordered_json e;
    e["name"] = d.name;
    if (d.synthetic) e["synthetic"] = to_json(*d.synthetic);
    if (!d.csv.empty()) {
      e["csv"] = d.csv.string();
      e["header"] = d.csv_header;
    }
    if (!d.generated.empty()) e["generated"] = d.generated.string();
    ds.push_back(e);
  }
  j["datasets"] = ds;
  j["methods"] = c.methods;
  if (!c.external.empty()) {
    ordered_json ex = ordered_json::array();
    for (const auto& e : c.external)
      ex.push_back({{"method", e.method}, {"dataset", e.dataset}, {"repeat", e.repeat},
                    {"path", e.path.string()}});
    j["external"] = ex;
  }
  j["rank"] = c.rank;
  ordered_json b = ordered_json::object();
  if (c.budget.sweeps) b["sweeps"] = *c.budget.sweeps;
  if (c.budget.seconds) b["seconds"] = *c.budget.seconds;
  j["budget"] = b;
  j["repeats"] = c.repeats;
  j["seed"] = c.seed;
  j["mask_fraction"] = c.mask_fraction;
  j["epsilon_rel"] = c.epsilon_rel;
  j["acol_q"] = c.acol_q;
  j["dc_cap"] = c.dc_cap;
  j["dc_mask"] = c.dc_mask;
  j["grid_step"] = c.grid_step;
  j["bootstrap_resamples"] = c.bootstrap_resamples;
  j["compute_ne"] = c.compute_ne;
  return j;
}

LoadedDataset load_dataset(const DatasetSource& src, double mask_fraction, std::uint64_t seed) {
  LoadedDataset out;
  out.name = src.name;
  if (src.synthetic) {
    SynthDataset gen = generate(*src.synthetic);
    out.train = std::move(gen.split.train);
    out.test_mask = std::move(gen.split.test_mask);
    out.truth = std::move(gen.mixture.full);
  } else if (!src.csv.empty()) {
    const MaskedMatrix data = read_csv(src.csv, src.csv_header);
    data.validate();
    MaskedSplit split = apply_mask(data, mask_fraction, seed);
    out.train = std::move(split.train);
    out.test_mask = std::move(split.test_mask);
    out.truth = data.values();
  } else if (!src.generated.empty()) {
    out.train = read_csv(src.generated / "train.csv", false);
    out.truth = read_csv(src.generated / "full.csv", false).values();
    if (out.truth.rows() != out.train.rows() || out.truth.cols() != out.train.cols()) {
      throw IoError("train.csv and full.csv shapes differ in " + src.generated.string());
    }
    out.test_mask.assign(out.train.rows() * out.train.cols(), 0);
    const json side = json::parse(read_text(src.generated / "dataset.json"));
    for (const auto& c : side.at("test_mask")) {
      const auto i = c.at(0).get<std::size_t>(), j = c.at(1).get<std::size_t>();
      if (i >= out.train.rows() || j >= out.train.cols()) throw IoError("test mask out of range");
      out.test_mask[i * out.train.cols() + j] = 1;
    }
  } else {
    throw std::invalid_argument("dataset '" + src.name + "' has no source");
  }
  out.train.validate();
  return out;
}

namespace {

struct RunRecord {
  FitResult fit;
  double rmse_a = 0.0;
  double rmse_p = std::numeric_limits<double>::quiet_NaN();
  double dc = 0.0;
};

constexpr std::size_t kLargeDatasetEntries = 1'000'000;

std::size_t worker_count(const ExperimentConfig& c) {
  if (c.serial) return 1;
  if (c.workers > 0) return c.workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 1 ? hw - 1 : 1;
}

std::vector<std::uint8_t> mask_of(const MaskedMatrix& m) { return {m.mask().begin(), m.mask().end()}; }

RunRecord evaluate_run(const LoadedDataset& ds, const MethodSpec& method, const FitConfig& fc,
                       const ExperimentConfig& config, std::uint64_t dc_seed) {
  RunRecord rec;
  rec.fit = fit_method(ds.train, method, fc);
  const Matrix pred = trop_matmul(rec.fit.factors.u, rec.fit.factors.v);
  const auto train_mask = mask_of(ds.train);
  rec.rmse_a = rmse(pred, ds.truth, train_mask);
  const bool has_test = std::any_of(ds.test_mask.begin(), ds.test_mask.end(),
                                    [](std::uint8_t b) { return b != 0; });
  if (has_test) rec.rmse_p = rmse(pred, ds.truth, ds.test_mask);

  std::vector<std::uint8_t> dc_mask;
  if (config.dc_mask == "train" || !has_test) dc_mask = train_mask;
  else if (config.dc_mask == "test") dc_mask = ds.test_mask;
  else {
    dc_mask = train_mask;
    for (std::size_t p = 0; p < dc_mask.size(); ++p) dc_mask[p] |= ds.test_mask[p];
  }
  rec.dc = masked_distance_correlation(ds.truth, pred, dc_mask, config.dc_cap, dc_seed);
  return rec;
}

struct MethodSeries {
  std::string name;
  std::vector<Trajectory> trajectories;  // per repeat
  std::vector<const RunRecord*> runs;    // empty for external methods
};

void write_ne_csv(const std::filesystem::path& path, const std::vector<double>& grid,
                  const ordered_json& methods) {
  std::string out = "t";
  std::vector<const ordered_json*> with_ne;
  for (const auto& m : methods) {
    if (!m.contains("ne")) continue;
    with_ne.push_back(&m);
    const std::string name = m["name"].get<std::string>();
    out += "," + name + "_median," + name + "_q1," + name + "_q3";
  }
  out += '\n';
  for (std::size_t p = 0; p < grid.size(); ++p) {
    out += format_double(grid[p]);
    for (const auto* m : with_ne) {
      for (const char* key : {"median", "q1", "q3"}) {
        out += ',';
        out += format_double((*m)["ne"][key][p].get<double>());
      }
    }
    out += '\n';
  }
  write_text(path, out);
}

void write_metrics_table(const std::filesystem::path& path, const ordered_json& datasets) {
  // Rows: metric x method, columns: datasets.
  std::vector<std::string> methods;
  for (const auto& d : datasets)
    for (const auto& m : d["methods"])
      if (m.contains("median") &&
          std::find(methods.begin(), methods.end(), m["name"].get<std::string>()) == methods.end())
        methods.push_back(m["name"].get<std::string>());

  std::string out = "metric,method";
  for (const auto& d : datasets) out += "," + d["name"].get<std::string>();
  out += '\n';
  for (const auto& [label, key] : std::vector<std::pair<std::string, std::string>>{
           {"DC", "dc"}, {"RMSE-P", "rmse_p"}, {"RMSE-A", "rmse_a"}}) {
    for (const auto& method : methods) {
      out += label + "," + method;
      for (const auto& d : datasets) {
        out += ',';
        for (const auto& m : d["methods"]) {
          if (m["name"] != method || !m.contains("median")) continue;
          const auto& v = m["median"][key];
          if (v.is_number()) out += format_double(v.get<double>());
        }
      }
      out += '\n';
    }
  }
  write_text(path, out);
}

}  // namespace

ordered_json run_experiment(const ExperimentConfig& requested) {
  requested.validate();
  std::vector<LoadedDataset> datasets;
  for (std::size_t d = 0; d < requested.datasets.size(); ++d) {
    datasets.push_back(load_dataset(requested.datasets[d], requested.mask_fraction,
                                    derive_seed(requested.seed, 0xda7a, d)));
  }
  ExperimentConfig config = requested;
  if (!config.budget.sweeps && !config.budget.seconds) {
    const bool large = std::any_of(datasets.begin(), datasets.end(), [](const LoadedDataset& d) {
      return d.train.rows() * d.train.cols() > kLargeDatasetEntries;
    });
    config.budget.seconds = large ? 600.0 : 100.0;
    spdlog::info("no budget configured, using {} s per run", *config.budget.seconds);
  }
  const BudgetClock clock = config.budget.clock();
  std::vector<MethodSpec> methods;
  std::vector<std::string> method_names;
  for (const auto& m : config.methods) {
    methods.push_back(parse_method(m));
    method_names.push_back(methods.back().name());
  }

  const std::size_t per_dataset = methods.size() * config.repeats;
  const std::size_t total = datasets.size() * per_dataset;
  std::vector<RunRecord> records(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;

  const auto work = [&] {
    for (std::size_t t = next++; t < total; t = next++) {
      const std::size_t d = t / per_dataset;
      const std::size_t m = (t % per_dataset) / config.repeats;
      const std::size_t rep = t % config.repeats;
      FitConfig fc;
      fc.rank = config.rank;
      fc.budget = config.budget;
      fc.seed = derive_seed(config.seed, d, rep);
      fc.epsilon_rel = config.epsilon_rel;
      fc.acol_q = config.acol_q;
      try {
        records[t] = evaluate_run(datasets[d], methods[m], fc, config,
                                  derive_seed(config.seed, 0xdc, d, rep));
        std::lock_guard lock(log_mu);
        spdlog::info("{} / {} / repeat {}: error {} after {} sweeps", datasets[d].name,
                     method_names[m], rep, records[t].fit.final_error, records[t].fit.sweeps);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(worker_count(config), std::max<std::size_t>(total, 1));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const std::vector<double> grid = regular_grid(config.budget.limit(), config.grid_step);
  const bool wall = clock == BudgetClock::WallSeconds;

  ordered_json results;
  results["config"] = to_json(config);
  results["clock"] = clock_name(clock);
  results["t_max"] = config.budget.limit();
  results["grid"] = grid;
  ordered_json ds_out = ordered_json::array();

  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const LoadedDataset& ds = datasets[d];
    std::vector<MethodSeries> series;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      MethodSeries s{method_names[m], {}, {}};
      for (std::size_t rep = 0; rep < config.repeats; ++rep) {
        const RunRecord& rec = records[d * per_dataset + m * config.repeats + rep];
        s.trajectories.push_back(rec.fit.trajectory);
        s.runs.push_back(&rec);
      }
      series.push_back(std::move(s));
    }
    std::map<std::string, std::vector<std::pair<std::size_t, Trajectory>>> external;
    for (const auto& e : config.external) {
      if (e.dataset != ds.name) continue;
      const std::string name = parse_method(e.method).baseline ? "STMF" : e.method;
      external[name].emplace_back(e.repeat,
                                  read_trajectory_jsonl(e.path, clock, config.budget.limit()));
    }
    for (auto& [name, list] : external) {
      std::sort(list.begin(), list.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      auto it = std::find_if(series.begin(), series.end(),
                             [&](const MethodSeries& s) { return s.name == name; });
      if (it != series.end()) continue;  // internal runs take precedence
      MethodSeries s{name, {}, {}};
      for (auto& [rep, traj] : list) s.trajectories.push_back(std::move(traj));
      series.push_back(std::move(s));
    }

    const MethodSeries* baseline = nullptr;
    for (const auto& s : series)
      if (s.name == "STMF") baseline = &s;

    ordered_json dj;
    dj["name"] = ds.name;
    dj["rows"] = ds.train.rows();
    dj["cols"] = ds.train.cols();
    dj["given"] = ds.train.given_count();
    bool ne_defined = config.compute_ne && baseline != nullptr;
    if (ne_defined) {
      for (const auto& b : baseline->trajectories)
        if (b.init_error() == b.final_error()) ne_defined = false;
    }
    dj["ne_defined"] = ne_defined;
    if (ne_defined) {
      std::vector<double> perfect;
      for (const auto& b : baseline->trajectories)
        perfect.push_back(-b.final_error() / (b.init_error() - b.final_error()));
      dj["perfect_ne"] = median(perfect);
    }

    ordered_json mj = ordered_json::array();
    for (const auto& s : series) {
      ordered_json one;
      one["name"] = s.name;
      one["external"] = s.runs.empty();
      if (!s.runs.empty()) {
        ordered_json runs = ordered_json::array();
        std::vector<double> fe, ra, rp, dc;
        for (std::size_t rep = 0; rep < s.runs.size(); ++rep) {
          const RunRecord& rec = *s.runs[rep];
          ordered_json r;
          r["repeat"] = rep;
          r["seed"] = derive_seed(config.seed, d, rep);
          r["initial_error"] = rec.fit.trajectory.init_error();
          r["final_error"] = rec.fit.final_error;
          r["sweeps"] = rec.fit.sweeps;
          r["converged"] = rec.fit.converged;
          r["accepted_updates"] = rec.fit.counters.accepted;
          if (wall) r["wall_seconds"] = rec.fit.trajectory.samples.back().wall_seconds;
          r["rmse_a"] = rec.rmse_a;
          r["rmse_p"] = number_or_null(rec.rmse_p);
          r["dc"] = rec.dc;
          runs.push_back(r);
          fe.push_back(rec.fit.final_error);
          ra.push_back(rec.rmse_a);
          if (std::isfinite(rec.rmse_p)) rp.push_back(rec.rmse_p);
          dc.push_back(rec.dc);
        }
        one["runs"] = runs;
        one["median"] = {{"final_error", median(fe)},
                         {"rmse_a", median(ra)},
                         {"rmse_p", rp.empty() ? json(nullptr) : json(median(rp))},
                         {"dc", median(dc)}};
      }
      if (ne_defined) {
        std::vector<std::vector<double>> per_rep;
        for (std::size_t rep = 0; rep < s.trajectories.size(); ++rep) {
          const Trajectory& base =
              baseline->trajectories[rep % baseline->trajectories.size()];
          per_rep.push_back(normalized_error(s.trajectories[rep], base, grid));
        }
        std::vector<double> med(grid.size()), q1(grid.size()), q3(grid.size());
        for (std::size_t p = 0; p < grid.size(); ++p) {
          std::vector<double> col;
          for (const auto& v : per_rep) col.push_back(v[p]);
          med[p] = median(col);
          q1[p] = quantile(col, 0.25);
          q3[p] = quantile(col, 0.75);
        }
        one["ne"] = {{"median", med}, {"q1", q1}, {"q3", q3}};
        one["final_ne"] = med.back();
        const auto ttr = time_to_reach(grid, med, 0.0);
        one["time_to_reach"] = ttr ? json(*ttr) : json(nullptr);
      }
      mj.push_back(one);

      for (std::size_t rep = 0; rep < s.trajectories.size() && !s.runs.empty(); ++rep) {
        write_trajectory_jsonl(config.out / "trajectories" / ds.name / s.name /
                                   ("rep" + std::to_string(rep) + ".jsonl"),
                               s.trajectories[rep], wall);
      }
    }
    dj["methods"] = mj;
    if (ne_defined) write_ne_csv(config.out / ("ne_" + ds.name + ".csv"), grid, mj);
    ds_out.push_back(dj);
  }
  results["datasets"] = ds_out;

  write_metrics_table(config.out / "metrics_table.csv", results["datasets"]);
  write_text(config.out / "results.json", results.dump(2) + "\n");
  write_rank_outputs(config.out, config.out);
  return results;
}

}  // namespace tropfact
