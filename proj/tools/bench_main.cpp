// Benchmark driver: builds one of the model problems, factorizes it with
// the selected method, and reports timings, memory and accuracy metrics
// as CSV or JSON-lines.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "skelfac/bench.hpp"

namespace {

std::vector<skelfac::Index> parse_sizes(const std::string& arg) {
  std::vector<skelfac::Index> out;
  std::stringstream ss(arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoll(item));
  }
  if (out.empty()) throw skelfac::Error("config: --n list is empty");
  return out;
}

std::set<std::string> parse_metrics(const std::string& arg) {
  std::set<std::string> out;
  std::stringstream ss(arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(item);
  }
  return out;
}

void print_summary(const skelfac::RunReport& r) {
  std::cout << "N=" << r.n << " method=" << r.method << " eps=" << r.eps
            << " t_f=" << r.t_factor << "s t_s=" << r.t_solve << "s m_f=" << r.m_f
            << "B";
  if (r.e_a) std::cout << " e_a=" << *r.e_a;
  if (r.e_s) std::cout << " e_s=" << *r.e_s;
  if (r.n_i) std::cout << " n_i=" << *r.n_i;
  if (r.e_p) std::cout << " e_p=" << *r.e_p;
  if (r.logdet) std::cout << " logdet=" << *r.logdet;
  std::cout << " k_levels=[";
  for (std::size_t i = 0; i < r.k_levels.size(); ++i)
    std::cout << (i ? ";" : "") << r.k_levels[i];
  std::cout << "]\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical skeletonization factorization benchmark"};

  std::string problem = "square2d";
  std::string sizes = "32";
  double eps = 1e-6;
  std::string method = "rs-s";
  skelfac::Index n_occ = 0;
  skelfac::Index n_proxy = 0;
  std::uint64_t seed = 1;
  std::string metrics;
  std::string out_path;
  std::string format = "csv";
  double sigma = 0.15;
  double ridge = 1e-2;
  std::string export_mesh;
  bool validate = false;

  app.add_option("--problem", problem, "square2d | cube3d | sphere | gaussian-spd");
  app.add_option("--n", sizes,
                 "comma-separated sizes (points per side, refinement level, or N)");
  app.add_option("--eps", eps, "ID tolerance");
  app.add_option("--method", method, "rs-s | rs-ws");
  app.add_option("--nocc", n_occ, "leaf occupancy (0: per-problem default)");
  app.add_option("--nproxy", n_proxy, "proxy points (0: 64 in 2D, 512 in 3D)");
  app.add_option("--seed", seed, "seed for all randomized metrics");
  app.add_option("--metrics", metrics, "comma list of e_a,e_s,n_i,e_p,logdet");
  app.add_option("--out", out_path, "output file (appends)");
  app.add_option("--format", format, "csv | json");
  app.add_option("--sigma", sigma, "gaussian-spd kernel width");
  app.add_option("--ridge", ridge, "gaussian-spd diagonal ridge");
  app.add_option("--export-mesh", export_mesh, "write the sphere mesh as text");
  app.add_flag("--validate", validate, "run structural cache scans while factoring");

  CLI11_PARSE(app, argc, argv);

  try {
    skelfac::require(format == "csv" || format == "json",
                     "config: format must be csv or json");
    const auto size_list = parse_sizes(sizes);

    std::ofstream file;
    bool write_header = false;
    if (!out_path.empty()) {
      write_header = format == "csv" && (!std::filesystem::exists(out_path) ||
                                         std::filesystem::file_size(out_path) == 0);
      file.open(out_path, std::ios::app);
      skelfac::require(file.good(), "io: cannot open output file " + out_path);
    }

    if (!export_mesh.empty()) {
      skelfac::require(problem == "sphere", "config: --export-mesh needs --problem sphere");
      const auto mesh = skelfac::icosphere(static_cast<int>(size_list.front()));
      std::ofstream ms(export_mesh);
      skelfac::require(ms.good(), "io: cannot open mesh file " + export_mesh);
      skelfac::write_mesh_text(mesh, ms);
    }

    for (skelfac::Index n : size_list) {
      skelfac::RunConfig cfg;
      cfg.problem = problem;
      cfg.n = n;
      cfg.eps = eps;
      cfg.method = method;
      cfg.n_occ = n_occ;
      cfg.n_proxy = n_proxy;
      cfg.seed = seed;
      cfg.metrics = parse_metrics(metrics);
      cfg.sigma = sigma;
      cfg.ridge = ridge;
      cfg.validate = validate;

      const skelfac::RunReport rep = skelfac::run_benchmark(cfg);
      print_summary(rep);
      if (file.is_open()) {
        if (format == "csv") {
          skelfac::emit_report_csv(file, rep, write_header);
          write_header = false;
        } else {
          skelfac::emit_report_json(file, rep);
        }
        skelfac::require(file.good(), "io: write failed");
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"" << e.what() << "\"}\n";
    return 1;
  }
  return 0;
}
