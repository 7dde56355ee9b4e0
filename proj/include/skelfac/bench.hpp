#pragma once

#include <optional>
#include <set>
#include <string>

#include "skelfac/problems.hpp"
#include "skelfac/verify.hpp"

namespace skelfac {

/// One benchmark run: problem, size, tolerance, method and requested
/// metrics.  Seeded metrics are bitwise reproducible; wall-clock fields
/// are not.
struct RunConfig {
  std::string problem = "square2d";  // square2d | cube3d | sphere | gaussian-spd
  Index n = 32;                      // per-side count, refinement level, or N
  double eps = 1e-6;
  std::string method = "rs-s";  // rs-s | rs-ws
  Index n_occ = 0;              // 0: per-problem default
  Index n_proxy = 0;            // 0: per-problem default
  std::uint64_t seed = 1;
  std::set<std::string> metrics;  // e_a, e_s, n_i, e_p, logdet
  double sigma = 0.15;            // gaussian-spd kernel width
  double ridge = 1e-2;            // gaussian-spd diagonal ridge
  Index dense_limit = 16384;
  bool validate = false;
};

struct RunReport {
  Index n = 0;
  std::string method;
  double eps = 0.0;
  double t_factor = 0.0;
  double t_solve = 0.0;
  std::size_t m_f = 0;
  std::optional<double> e_a;
  std::optional<double> e_s;
  std::optional<int> n_i;
  std::optional<double> e_p;
  std::optional<double> logdet;
  std::vector<Index> k_levels;
};

RunReport run_benchmark(const RunConfig& config);

/// Fixed-schema CSV row; the header is written only when requested.
/// k_levels nests inside one cell, semicolon separated.
void emit_report_csv(std::ostream& os, const RunReport& report, bool with_header);

/// One JSON object per line (JSON-lines, append friendly).
void emit_report_json(std::ostream& os, const RunReport& report);

std::string csv_header();

}  // namespace skelfac
