#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "skelfac/bench.hpp"

using namespace skelfac;

TEST_SUITE_BEGIN("bench");

TEST_CASE("benchmark runs are reproducible under a fixed seed") {
  RunConfig cfg;
  cfg.problem = "square2d";
  cfg.n = 16;
  cfg.eps = 1e-4;
  cfg.method = "rs-s";
  cfg.n_occ = 32;
  cfg.seed = 123;
  cfg.metrics = {"e_a", "n_i"};
  const RunReport a = run_benchmark(cfg);
  const RunReport b = run_benchmark(cfg);
  REQUIRE(a.e_a.has_value());
  REQUIRE(b.e_a.has_value());
  CHECK(*a.e_a == *b.e_a);  // bitwise
  CHECK(*a.n_i == *b.n_i);
  CHECK(a.m_f == b.m_f);
  CHECK(a.k_levels == b.k_levels);
  CHECK(a.n == 256);
}

TEST_CASE("gaussian problem reports a log determinant") {
  RunConfig cfg;
  cfg.problem = "gaussian-spd";
  cfg.n = 128;
  cfg.eps = 1e-9;
  cfg.method = "rs-s";
  cfg.n_occ = 32;
  cfg.metrics = {"logdet"};
  const RunReport rep = run_benchmark(cfg);
  REQUIRE(rep.logdet.has_value());
  CHECK(std::isfinite(*rep.logdet));
}

TEST_CASE("config validation rejects inconsistent requests") {
  RunConfig cfg;
  cfg.problem = "nosuch";
  CHECK_THROWS_AS(run_benchmark(cfg), Error);

  cfg.problem = "square2d";
  cfg.eps = 0.0;
  CHECK_THROWS_AS(run_benchmark(cfg), Error);

  cfg.eps = 1e-6;
  cfg.method = "magic";
  CHECK_THROWS_AS(run_benchmark(cfg), Error);

  cfg.method = "rs-s";
  cfg.metrics = {"e_p"};
  CHECK_THROWS_AS(run_benchmark(cfg), Error);  // e_p needs the sphere

  cfg.metrics = {"n_i"};
  cfg.problem = "sphere";
  cfg.n = 1;
  CHECK_THROWS_AS(run_benchmark(cfg), Error);  // no iterative path

  cfg.problem = "square2d";
  cfg.n = 200;  // N = 40000 beyond the dense guard
  cfg.metrics = {"e_a"};
  CHECK_THROWS_AS(run_benchmark(cfg), Error);
}

TEST_CASE("csv schema is fixed and append friendly") {
  RunConfig cfg;
  cfg.problem = "square2d";
  cfg.n = 16;
  cfg.eps = 1e-4;
  cfg.n_occ = 32;
  const RunReport rep = run_benchmark(cfg);  // no metrics requested

  std::stringstream ss;
  emit_report_csv(ss, rep, true);
  emit_report_csv(ss, rep, false);
  std::string header, row1, row2;
  std::getline(ss, header);
  std::getline(ss, row1);
  std::getline(ss, row2);
  CHECK(header == csv_header());
  CHECK(row1 == row2);
  // Fixed schema: 10 commas even with empty metric cells.
  CHECK(std::count(row1.begin(), row1.end(), ',') == 10);
  // Empty metric columns are present but empty.
  CHECK(row1.find(",,") != std::string::npos);
}

TEST_CASE("json lines round trip") {
  RunConfig cfg;
  cfg.problem = "square2d";
  cfg.n = 16;
  cfg.eps = 1e-4;
  cfg.n_occ = 32;
  cfg.metrics = {"e_a"};
  const RunReport rep = run_benchmark(cfg);

  std::stringstream ss;
  emit_report_json(ss, rep);
  const auto j = nlohmann::json::parse(ss.str());
  CHECK(j["N"].get<Index>() == rep.n);
  CHECK(j["method"].get<std::string>() == rep.method);
  CHECK(j["eps"].get<double>() == rep.eps);
  CHECK(j["m_f"].get<std::size_t>() == rep.m_f);
  CHECK(j["e_a"].get<double>() == *rep.e_a);
  CHECK(j["n_i"].is_null());
  CHECK(j["k_levels"].size() == rep.k_levels.size());
}

TEST_SUITE_END();
