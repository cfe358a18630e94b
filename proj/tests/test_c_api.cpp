#include "sketchls/sketchls.h"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace fs = std::filesystem;

TEST_CASE("version and status strings") {
  CHECK(std::strlen(sls_version()) > 0);
  CHECK(std::string(sls_status_string(SLS_OK)) != std::string(sls_status_string(SLS_ERR_IO)));
}

TEST_CASE("matrix handles round trip row-major data") {
  const double data[6] = {1, 2, 3, 4, 5, 6};
  sls_matrix* m = nullptr;
  REQUIRE(sls_matrix_create(3, 2, data, &m) == SLS_OK);
  size_t rows = 0, cols = 0;
  CHECK(sls_matrix_dims(m, &rows, &cols) == SLS_OK);
  CHECK(rows == 3);
  CHECK(cols == 2);
  double back[6] = {};
  CHECK(sls_matrix_copy(m, back, 6) == SLS_OK);
  for (int i = 0; i < 6; ++i) CHECK(back[i] == data[i]);
  CHECK(sls_matrix_copy(m, back, 5) == SLS_ERR_INVALID_INPUT);
  sls_matrix_free(m);
  sls_matrix_free(nullptr);
}

TEST_CASE("null and invalid arguments map to error codes") {
  sls_matrix* m = nullptr;
  CHECK(sls_matrix_create(2, 2, nullptr, &m) == SLS_ERR_INVALID_INPUT);
  CHECK(std::strlen(sls_last_error()) > 0);
  const double nan_data[1] = {NAN};
  CHECK(sls_matrix_create(1, 1, nan_data, &m) == SLS_ERR_INVALID_INPUT);
  CHECK(sls_sketch_draw(nullptr, 0, 0, 1, 0, 0, nullptr) == SLS_ERR_INVALID_INPUT);
  sls_config* c = nullptr;
  CHECK(sls_config_parse("{\"bogus\": 1}", &c) == SLS_ERR_INVALID_INPUT);
  CHECK(sls_config_parse("not json", &c) == SLS_ERR_INVALID_INPUT);
  CHECK(sls_config_load("/nonexistent/x.json", &c) == SLS_ERR_IO);
}

TEST_CASE("design, sketch, solve and criteria through the C API") {
  sls_matrix* x = nullptr;
  REQUIRE(sls_generate_design(64, 4, 10.0, 0.5, 7, &x) == SLS_OK);
  std::vector<double> lev(64);
  REQUIRE(sls_leverage_scores(x, lev.data(), lev.size()) == SLS_OK);
  double total = 0;
  for (double l : lev) total += l;
  CHECK(total == doctest::Approx(4.0));
  size_t k = 0;
  CHECK(sls_heavy_hitter_k(lev.data(), lev.size(), 0.9, &k) == SLS_OK);
  CHECK(k >= 4);
  CHECK(k <= 64);

  std::vector<double> xd(64 * 4);
  REQUIRE(sls_matrix_copy(x, xd.data(), xd.size()) == SLS_OK);
  std::vector<double> y(64);
  for (size_t i = 0; i < 64; ++i) y[i] = xd[i * 4] + 2 * xd[i * 4 + 1] - xd[i * 4 + 3];

  double beta[4];
  size_t rank = 0;
  REQUIRE(sls_solve(nullptr, x, y.data(), 64, beta, 4, &rank) == SLS_OK);
  CHECK(rank == 4);
  CHECK(beta[0] == doctest::Approx(1.0));
  CHECK(beta[1] == doctest::Approx(2.0));
  CHECK(beta[2] == doctest::Approx(0.0));
  CHECK(beta[3] == doctest::Approx(-1.0));

  sls_sketch* s = nullptr;
  REQUIRE(sls_sketch_draw(x, SLS_SKETCH_GAUSSIAN, 0.0, 32, 11, 0, &s) == SLS_OK);
  size_t r = 0, n = 0;
  CHECK(sls_sketch_dims(s, &r, &n) == SLS_OK);
  CHECK(r == 32);
  CHECK(n == 64);
  // noiseless Y is recovered exactly by any rank-preserving sketch
  REQUIRE(sls_solve(s, x, y.data(), 64, beta, 4, &rank) == SLS_OK);
  CHECK(beta[1] == doctest::Approx(2.0));

  sls_matrix* sx = nullptr;
  REQUIRE(sls_sketch_apply(s, x, &sx) == SLS_OK);
  size_t sr = 0, sc = 0;
  sls_matrix_dims(sx, &sr, &sc);
  CHECK(sr == 32);
  CHECK(sc == 4);

  const double ones[4] = {1, 1, 1, 1};
  sls_criteria_report rep{};
  REQUIRE(sls_criteria(x, s, ones, 4, &rep) == SLS_OK);
  CHECK(rep.rank_preserved == 1);
  CHECK(rep.c_wc >= 1.0);
  CHECK(rep.c_pe > 1.0);
  CHECK(rep.c_re - 1.0 == doctest::Approx((rep.c_pe - 1.0) / 15.0));

  sls_sketch* id = nullptr;
  REQUIRE(sls_sketch_draw(x, SLS_SKETCH_IDENTITY, 0.0, 64, 0, 0, &id) == SLS_OK);
  REQUIRE(sls_criteria(x, id, ones, 4, &rep) == SLS_OK);
  CHECK(rep.c_wc == doctest::Approx(1.0));
  CHECK(rep.c_pe == doctest::Approx(1.0));
  CHECK(sls_sketch_draw(x, 42, 0.0, 8, 0, 0, &s) == SLS_ERR_INVALID_INPUT);

  sls_matrix_free(sx);
  sls_sketch_free(s);
  sls_sketch_free(id);
  sls_matrix_free(x);
}

TEST_CASE("experiment run, write and bounds through the C API") {
  const fs::path dir = fs::temp_directory_path() / "sketchls_c_api";
  fs::remove_all(dir);
  sls_config* c = nullptr;
  REQUIRE(sls_config_parse(R"({"n": 64, "p": 4, "nu_list": [10], "r_list": [16],
                              "replications": 4, "output_dir": ""})",
                           &c) == SLS_OK);
  const char* json = nullptr;
  REQUIRE(sls_config_to_json(c, &json) == SLS_OK);
  CHECK(std::string(json).find("\"replications\"") != std::string::npos);

  sls_table* t = nullptr;
  REQUIRE(sls_run_experiment(c, 2, &t) == SLS_OK);
  size_t rows = 0, aggs = 0;
  CHECK(sls_table_row_count(t, &rows, &aggs) == SLS_OK);
  CHECK(rows == 6 * 4);
  CHECK(aggs == 6);
  REQUIRE(sls_table_write(t, SLS_FORMAT_CSV, dir.string().c_str()) == SLS_OK);
  CHECK(fs::exists(dir / "aggregate.csv"));
  CHECK(sls_table_write(t, 7, dir.string().c_str()) == SLS_ERR_INVALID_INPUT);
  CHECK(sls_write_leverage(c, SLS_FORMAT_CSV, dir.string().c_str()) == SLS_OK);

  size_t violations = 99;
  REQUIRE(sls_check_bounds(c, 1, dir.string().c_str(), &violations) == SLS_OK);
  CHECK(violations == 0);
  CHECK(fs::exists(dir / "bounds.csv"));

  sls_table_free(t);
  sls_config_free(c);
  fs::remove_all(dir);
}
