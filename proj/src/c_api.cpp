#include "tropfact/tropfact.h"

#include <cmath>
#include <memory>
#include <new>
#include <string>

#include <spdlog/spdlog.h>

#include "tropfact/datagen.hpp"
#include "tropfact/experiment.hpp"
#include "tropfact/io.hpp"
#include "tropfact/strategies.hpp"

struct tf_matrix {
  tropfact::MaskedMatrix m;
};

struct tf_fit_result {
  tropfact::FitResult result;
  tropfact::MethodSpec method;
  tropfact::FitConfig config;
};

namespace {

thread_local std::string g_last_error;

tf_status fail(tf_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Maps exceptions thrown by the core onto status codes.
template <class F>
tf_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const tropfact::DimensionError& e) {
    return fail(TF_ERR_DIMENSION, e.what());
  } catch (const tropfact::IoError& e) {
    return fail(TF_ERR_IO, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(TF_ERR_PARSE, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(TF_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(TF_ERR_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(TF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TF_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(TF_ERR_INTERNAL, "unknown error");
  }
}

nlohmann::json parse_or_empty(const char* text) {
  if (text == nullptr || *text == '\0') return nlohmann::json::object();
  return nlohmann::json::parse(text);
}

}  // namespace

extern "C" {

const char* tf_version(void) { return "1.0.0"; }

const char* tf_last_error(void) { return g_last_error.c_str(); }

const char* tf_status_string(tf_status status) {
  switch (status) {
    case TF_OK: return "ok";
    case TF_ERR_INVALID_ARGUMENT: return "invalid argument";
    case TF_ERR_DIMENSION: return "dimension mismatch";
    case TF_ERR_IO: return "i/o error";
    case TF_ERR_PARSE: return "parse error";
    case TF_ERR_CONFIG: return "invalid configuration";
    case TF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

tf_status tf_set_log_level(int level) {
  if (level < 0 || level > 6) return fail(TF_ERR_INVALID_ARGUMENT, "log level must be 0..6");
  spdlog::set_level(static_cast<spdlog::level::level_enum>(level));
  return TF_OK;
}

tf_status tf_matrix_create(size_t rows, size_t cols, const double* values, const uint8_t* mask,
                           tf_matrix** out) {
  if (out == nullptr || values == nullptr) return fail(TF_ERR_INVALID_ARGUMENT, "null pointer");
  *out = nullptr;
  return guarded([&] {
    tropfact::Matrix v(rows, cols, std::vector<double>(values, values + rows * cols));
    std::vector<std::uint8_t> mk(rows * cols, 1);
    if (mask != nullptr)
      for (std::size_t p = 0; p < mk.size(); ++p) mk[p] = mask[p] ? 1 : 0;
    *out = new tf_matrix{tropfact::MaskedMatrix(std::move(v), std::move(mk))};
    return TF_OK;
  });
}

tf_status tf_matrix_load_csv(const char* path, int has_header, tf_matrix** out) {
  if (out == nullptr || path == nullptr) return fail(TF_ERR_INVALID_ARGUMENT, "null pointer");
  *out = nullptr;
  return guarded([&] {
    *out = new tf_matrix{tropfact::read_csv(path, has_header != 0)};
    return TF_OK;
  });
}

tf_status tf_matrix_save_csv(const tf_matrix* m, const char* path) {
  if (m == nullptr || path == nullptr) return fail(TF_ERR_INVALID_ARGUMENT, "null pointer");
  return guarded([&] {
    tropfact::write_csv(path, m->m);
    return TF_OK;
  });
}

tf_status tf_matrix_shape(const tf_matrix* m, size_t* rows, size_t* cols) {
  if (m == nullptr) return fail(TF_ERR_INVALID_ARGUMENT, "null matrix");
  if (rows) *rows = m->m.rows();
  if (cols) *cols = m->m.cols();
  return TF_OK;
}

tf_status tf_matrix_get(const tf_matrix* m, size_t i, size_t j, double* value, int* given) {
  if (m == nullptr || value == nullptr) return fail(TF_ERR_INVALID_ARGUMENT, "null pointer");
  if (i >= m->m.rows() || j >= m->m.cols()) return fail(TF_ERR_DIMENSION, "index out of range");
  const bool g = m->m.given(i, j);
  *value = g ? m->m(i, j) : std::nan("");
  if (given) *given = g ? 1 : 0;
  return TF_OK;
}

void tf_matrix_destroy(tf_matrix* m) { delete m; }

tf_status tf_fit(const tf_matrix* data, const char* method, const char* config_json,
                 tf_fit_result** out) {
  if (data == nullptr || out == nullptr) return fail(TF_ERR_INVALID_ARGUMENT, "null pointer");
  *out = nullptr;
  return guarded([&] {
    auto res = std::make_unique<tf_fit_result>();
    res->method = tropfact::parse_method(method ? method : "FastSTMF");
    res->config = tropfact::fit_config_from_json(parse_or_empty(config_json));
    if (!res->config.budget.sweeps && !res->config.budget.seconds) res->config.budget.sweeps = 100;
    res->result = tropfact::fit_method(data->m, res->method, res->config);
    *out = res.release();
    return TF_OK;
  });
}

tf_status tf_fit_result_factor(const tf_fit_result* r, tf_factor which, tf_matrix** out) {
  if (r == nullptr || out == nullptr) return fail(TF_ERR_INVALID_ARGUMENT, "null pointer");
  *out = nullptr;
  if (which != TF_FACTOR_U && which != TF_FACTOR_V)
    return fail(TF_ERR_INVALID_ARGUMENT, "unknown factor");
  return guarded([&] {
    const auto& f = which == TF_FACTOR_U ? r->result.factors.u : r->result.factors.v;
    *out = new tf_matrix{tropfact::MaskedMatrix(f)};
    return TF_OK;
  });
}

tf_status tf_fit_result_error(const tf_fit_result* r, double* final_error, double* initial_error,
                              size_t* sweeps, int* converged) {
  if (r == nullptr) return fail(TF_ERR_INVALID_ARGUMENT, "null result");
  if (final_error) *final_error = r->result.final_error;
  if (initial_error) *initial_error = r->result.trajectory.init_error();
  if (sweeps) *sweeps = r->result.sweeps;
  if (converged) *converged = r->result.converged ? 1 : 0;
  return TF_OK;
}

tf_status tf_fit_result_trajectory_size(const tf_fit_result* r, size_t* count) {
  if (r == nullptr || count == nullptr) return fail(TF_ERR_INVALID_ARGUMENT, "null pointer");
  *count = r->result.trajectory.samples.size();
  return TF_OK;
}

tf_status tf_fit_result_sample(const tf_fit_result* r, size_t index, double* wall_seconds,
                               double* sweeps, double* error) {
  if (r == nullptr) return fail(TF_ERR_INVALID_ARGUMENT, "null result");
  const auto& samples = r->result.trajectory.samples;
  if (index >= samples.size()) return fail(TF_ERR_DIMENSION, "sample index out of range");
  if (wall_seconds) *wall_seconds = samples[index].wall_seconds;
  if (sweeps) *sweeps = samples[index].sweeps;
  if (error) *error = samples[index].error;
  return TF_OK;
}

tf_status tf_fit_result_save(const tf_fit_result* r, const char* dir) {
  if (r == nullptr || dir == nullptr) return fail(TF_ERR_INVALID_ARGUMENT, "null pointer");
  return guarded([&] {
    tropfact::write_fit_outputs(dir, r->result, r->method, r->config);
    return TF_OK;
  });
}

void tf_fit_result_destroy(tf_fit_result* r) { delete r; }

tf_status tf_generate(const char* spec_json, const char* out_dir) {
  if (out_dir == nullptr) return fail(TF_ERR_INVALID_ARGUMENT, "null output directory");
  return guarded([&] {
    const tropfact::SynthSpec spec = tropfact::synth_spec_from_json(parse_or_empty(spec_json));
    const tropfact::SynthDataset ds = tropfact::generate(spec);
    tropfact::write_dataset(out_dir, spec, ds.mixture, ds.split);
    spdlog::info("wrote {}x{} dataset to {}", spec.m, spec.n, out_dir);
    return TF_OK;
  });
}

tf_status tf_run_experiment(const char* config_json, const char* out_dir) {
  if (config_json == nullptr) return fail(TF_ERR_INVALID_ARGUMENT, "null config");
  return guarded([&] {
    tropfact::ExperimentConfig cfg =
        tropfact::experiment_config_from_json(nlohmann::json::parse(config_json));
    if (out_dir != nullptr && *out_dir != '\0') cfg.out = out_dir;
    tropfact::run_experiment(cfg);
    return TF_OK;
  });
}

tf_status tf_plot(const char* bundle_dir, const char* out_dir, size_t* written) {
  if (bundle_dir == nullptr) return fail(TF_ERR_INVALID_ARGUMENT, "null bundle directory");
  return guarded([&] {
    const std::size_t n =
        tropfact::write_plots(bundle_dir, out_dir && *out_dir ? out_dir : bundle_dir);
    if (written) *written = n;
    return TF_OK;
  });
}

tf_status tf_rank(const char* bundle_dir, const char* out_dir, size_t* written) {
  if (bundle_dir == nullptr) return fail(TF_ERR_INVALID_ARGUMENT, "null bundle directory");
  return guarded([&] {
    const std::size_t n =
        tropfact::write_rank_outputs(bundle_dir, out_dir && *out_dir ? out_dir : bundle_dir);
    if (written) *written = n;
    return TF_OK;
  });
}

}  // extern "C"
