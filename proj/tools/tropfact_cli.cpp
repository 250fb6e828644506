// Command line front end over the C interface.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tropfact/tropfact.h"

using nlohmann::json;

namespace {

int report(tf_status s, const char* what) {
  if (s == TF_OK) return 0;
  std::fprintf(stderr, "tropfact %s: %s: %s\n", what, tf_status_string(s), tf_last_error());
  return 2;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return json::parse(in);
}

void apply_log_env() {
  const char* env = std::getenv("TROPFACT_LOG");
  if (env == nullptr) return;
  static const char* names[] = {"trace", "debug", "info", "warn", "error", "critical", "off"};
  const std::string v = env;
  for (int lvl = 0; lvl < 7; ++lvl) {
    if (v == names[lvl] || v == std::to_string(lvl)) {
      tf_set_log_level(lvl);
      return;
    }
  }
  std::fprintf(stderr, "tropfact: ignoring TROPFACT_LOG=%s\n", env);
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> budget_seconds;
  std::optional<std::size_t> budget_sweeps;
  std::optional<std::size_t> rank;
  std::vector<std::string> methods;
  std::optional<double> mask_fraction;
  std::string out;
  bool serial = false;
};

void add_budget_flags(CLI::App* cmd, Common& c) {
  auto* secs = cmd->add_option("--budget-seconds", c.budget_seconds, "Wall-clock budget per run");
  auto* sweeps = cmd->add_option("--budget-sweeps", c.budget_sweeps, "Sweep budget per run");
  secs->excludes(sweeps);
}

}  // namespace

int main(int argc, char** argv) {
  apply_log_env();
  CLI::App app{"Tropical (max,+) matrix factorization for matrix completion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tf_version()));

  Common c;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  std::size_t gen_m = 200, gen_n = 200, gen_true_rank = 3;
  double gen_lambda = 0.5;
  gen->add_option("--config", c.config, "JSON dataset spec");
  gen->add_option("-m,--rows", gen_m, "Rows");
  gen->add_option("-n,--cols", gen_n, "Columns");
  gen->add_option("--true-rank", gen_true_rank, "Inner dimension of the generating factors");
  gen->add_option("--lambda", gen_lambda, "Tropical share of the mixture in [0,1]");
  gen->add_option("--seed", c.seed);
  gen->add_option("--mask-fraction", c.mask_fraction);
  gen->add_option("--out", c.out, "Output directory")->required();

  auto* fit = app.add_subcommand("fit", "Factorize one CSV matrix");
  std::string input;
  bool header = false;
  fit->add_option("input", input, "CSV matrix, empty or nan fields are missing")->required();
  fit->add_flag("--header", header, "Skip the first CSV line");
  fit->add_option("--config", c.config, "JSON fit config");
  fit->add_option("--method", c.methods, "Method name (default FastSTMF)");
  fit->add_option("--rank", c.rank);
  fit->add_option("--seed", c.seed);
  add_budget_flags(fit, c);
  fit->add_option("--out", c.out, "Output directory")->required();

  auto* exp = app.add_subcommand("experiment", "Run a configured experiment");
  exp->add_option("--config", c.config, "JSON experiment config")->required();
  exp->add_option("--method", c.methods, "Replace the configured methods");
  exp->add_option("--rank", c.rank);
  exp->add_option("--seed", c.seed);
  exp->add_option("--mask-fraction", c.mask_fraction);
  add_budget_flags(exp, c);
  exp->add_option("--out", c.out, "Output directory");
  exp->add_flag("--serial", c.serial, "Run one fit at a time");

  std::string bundle;
  auto* plot = app.add_subcommand("plot", "Render SVG plots from a results bundle");
  plot->add_option("bundle", bundle, "Results directory")->required();
  plot->add_option("--out", c.out, "Output directory (default: the bundle)");

  auto* rank = app.add_subcommand("rank", "Rank methods from a results bundle");
  rank->add_option("bundle", bundle, "Results directory")->required();
  rank->add_option("--out", c.out, "Output directory (default: the bundle)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      json spec = load_config(c.config);
      if (!gen->get_option("--rows")->empty() || !spec.contains("m")) spec["m"] = gen_m;
      if (!gen->get_option("--cols")->empty() || !spec.contains("n")) spec["n"] = gen_n;
      if (!gen->get_option("--true-rank")->empty() || !spec.contains("rank"))
        spec["rank"] = gen_true_rank;
      if (!gen->get_option("--lambda")->empty() || !spec.contains("lambda"))
        spec["lambda"] = gen_lambda;
      if (c.seed) spec["seed"] = *c.seed;
      if (c.mask_fraction) spec["mask_fraction"] = *c.mask_fraction;
      return report(tf_generate(spec.dump().c_str(), c.out.c_str()), "gen");
    }

    if (*fit) {
      json cfg = load_config(c.config);
      std::string method = cfg.value("method", std::string("FastSTMF"));
      if (!c.methods.empty()) method = c.methods.front();
      cfg.erase("method");
      if (c.rank) cfg["rank"] = *c.rank;
      if (c.seed) cfg["seed"] = *c.seed;
      if (c.budget_seconds) {
        cfg["budget_seconds"] = *c.budget_seconds;
        cfg.erase("budget_sweeps");
      }
      if (c.budget_sweeps) {
        cfg["budget_sweeps"] = *c.budget_sweeps;
        cfg.erase("budget_seconds");
      }
      tf_matrix* data = nullptr;
      if (int rc = report(tf_matrix_load_csv(input.c_str(), header ? 1 : 0, &data), "fit")) return rc;
      tf_fit_result* res = nullptr;
      const tf_status s = tf_fit(data, method.c_str(), cfg.dump().c_str(), &res);
      tf_matrix_destroy(data);
      if (int rc = report(s, "fit")) return rc;
      double final_error = 0, init_error = 0;
      std::size_t sweeps = 0;
      int converged = 0;
      tf_fit_result_error(res, &final_error, &init_error, &sweeps, &converged);
      const int rc = report(tf_fit_result_save(res, c.out.c_str()), "fit");
      tf_fit_result_destroy(res);
      if (rc) return rc;
      std::printf("%s: error %.6g -> %.6g after %zu sweeps%s\n", method.c_str(), init_error,
                  final_error, sweeps, converged ? " (converged)" : "");
      return 0;
    }

    if (*exp) {
      json cfg = load_config(c.config);
      if (!c.methods.empty()) cfg["methods"] = c.methods;
      if (c.rank) cfg["rank"] = *c.rank;
      if (c.seed) cfg["seed"] = *c.seed;
      if (c.mask_fraction) cfg["mask_fraction"] = *c.mask_fraction;
      if (c.budget_seconds) cfg["budget"] = {{"seconds", *c.budget_seconds}};
      if (c.budget_sweeps) cfg["budget"] = {{"sweeps", *c.budget_sweeps}};
      if (c.serial) cfg["serial"] = true;
      if (int rc = report(tf_run_experiment(cfg.dump().c_str(), c.out.c_str()), "experiment"))
        return rc;
      const std::string out = c.out.empty() ? cfg.value("out", std::string("results")) : c.out;
      std::printf("results written to %s\n", out.c_str());
      return 0;
    }

    if (*plot || *rank) {
      std::size_t written = 0;
      const tf_status s = *plot ? tf_plot(bundle.c_str(), c.out.c_str(), &written)
                                : tf_rank(bundle.c_str(), c.out.c_str(), &written);
      if (int rc = report(s, *plot ? "plot" : "rank")) return rc;
      std::printf("%zu file(s) written\n", written);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "tropfact: %s\n", e.what());
    return 2;
  }
  return 0;
}
