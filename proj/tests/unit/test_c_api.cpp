#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "tropfact/tropfact.h"

namespace fs = std::filesystem;

TEST_CASE("matrix handles") {
  const double values[] = {1, 2, 3, 4, 5, 6};
  const uint8_t mask[] = {1, 1, 0, 1, 1, 1};
  tf_matrix* m = nullptr;
  REQUIRE(tf_matrix_create(2, 3, values, mask, &m) == TF_OK);
  size_t rows = 0, cols = 0;
  CHECK(tf_matrix_shape(m, &rows, &cols) == TF_OK);
  CHECK(rows == 2);
  CHECK(cols == 3);
  double x = 0;
  int given = 0;
  CHECK(tf_matrix_get(m, 1, 2, &x, &given) == TF_OK);
  CHECK(x == 6);
  CHECK(given == 1);
  CHECK(tf_matrix_get(m, 0, 2, &x, &given) == TF_OK);
  CHECK(std::isnan(x));
  CHECK(given == 0);
  CHECK(tf_matrix_get(m, 2, 0, &x, &given) == TF_ERR_DIMENSION);
  CHECK(std::strlen(tf_last_error()) > 0);
  tf_matrix_destroy(m);

  CHECK(tf_matrix_create(2, 2, nullptr, nullptr, &m) == TF_ERR_INVALID_ARGUMENT);
  CHECK(tf_matrix_load_csv("/nonexistent.csv", 0, &m) == TF_ERR_IO);
  CHECK(m == nullptr);
  tf_matrix_destroy(nullptr);
}

TEST_CASE("fit through the C interface") {
  const double values[] = {2, 3, 4, 5, 1, 0, 2, 7, 3, 3, 3, 3};
  tf_matrix* m = nullptr;
  REQUIRE(tf_matrix_create(3, 4, values, nullptr, &m) == TF_OK);
  tf_fit_result* r = nullptr;
  REQUIRE(tf_fit(m, "FastSTMF", R"({"rank": 2, "budget_sweeps": 10, "seed": 4})", &r) == TF_OK);
  double fe = -1, ie = -1;
  size_t sweeps = 0, n = 0;
  int conv = 0;
  CHECK(tf_fit_result_error(r, &fe, &ie, &sweeps, &conv) == TF_OK);
  CHECK(fe <= ie);
  CHECK(tf_fit_result_trajectory_size(r, &n) == TF_OK);
  CHECK(n >= 1);
  double err = 0;
  CHECK(tf_fit_result_sample(r, 0, nullptr, nullptr, &err) == TF_OK);
  CHECK(err == ie);
  CHECK(tf_fit_result_sample(r, n, nullptr, nullptr, &err) == TF_ERR_DIMENSION);
  tf_matrix* u = nullptr;
  REQUIRE(tf_fit_result_factor(r, TF_FACTOR_U, &u) == TF_OK);
  size_t rows = 0, cols = 0;
  tf_matrix_shape(u, &rows, &cols);
  CHECK(rows == 3);
  CHECK(cols == 2);
  tf_matrix_destroy(u);

  const fs::path dir = fs::temp_directory_path() / "tropfact_capi_fit";
  fs::remove_all(dir);
  CHECK(tf_fit_result_save(r, dir.c_str()) == TF_OK);
  CHECK(fs::exists(dir / "fit.json"));
  tf_fit_result_destroy(r);

  CHECK(tf_fit(m, "NoSuchMethod", nullptr, &r) == TF_ERR_CONFIG);
  CHECK(tf_fit(m, "STMF", "{not json", &r) == TF_ERR_PARSE);
  CHECK(r == nullptr);
  tf_matrix_destroy(m);
}

TEST_CASE("pipeline entry points") {
  const fs::path dir = fs::temp_directory_path() / "tropfact_capi_pipe";
  fs::remove_all(dir);
  CHECK(tf_generate(R"({"m": 9, "n": 8, "rank": 3, "lambda": 1, "seed": 2})", (dir / "ds").c_str()) == TF_OK);
  CHECK(fs::exists(dir / "ds" / "train.csv"));
  CHECK(tf_generate(R"({"m": 2, "n": 8})", (dir / "bad").c_str()) == TF_ERR_CONFIG);

  const std::string cfg = R"({"datasets": [{"name": "d", "generated": ")" + (dir / "ds").string() +
                          R"("}], "methods": ["STMF", "FastSTMF"], "budget": {"sweeps": 3}, "repeats": 1})";
  CHECK(tf_run_experiment(cfg.c_str(), (dir / "res").c_str()) == TF_OK);
  size_t written = 0;
  CHECK(tf_plot((dir / "res").c_str(), nullptr, &written) == TF_OK);
  CHECK(written >= 1);
  CHECK(tf_rank((dir / "res").c_str(), (dir / "ranks").c_str(), &written) == TF_OK);
  CHECK(written == 2);
  CHECK(tf_plot((dir / "nothing").c_str(), nullptr, &written) == TF_OK);
  CHECK(written == 0);
  CHECK(tf_set_log_level(9) == TF_ERR_INVALID_ARGUMENT);
  CHECK(std::string(tf_status_string(TF_ERR_IO)) == "i/o error");
}
