#include "skelfac/bench.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace skelfac {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Index default_nocc(const std::string& problem) {
  if (problem == "square2d") return 256;
  if (problem == "sphere") return 256;
  return 64;  // cube3d, gaussian-spd
}

Index default_nproxy(int dim) { return dim == 2 ? 64 : 512; }

Vector seeded_gaussian(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

struct Built {
  MatrixSource source;
  bool spd = false;
  int dim = 2;
  std::optional<TriangleMesh> mesh;
};

Built build(const RunConfig& cfg) {
  if (cfg.problem == "square2d") {
    require(cfg.n >= 2, "config: square2d needs n >= 2 points per side");
    return Built{std::move(build_square2d(cfg.n).source), true, 2, std::nullopt};
  }
  if (cfg.problem == "cube3d") {
    require(cfg.n >= 2, "config: cube3d needs n >= 2 points per side");
    return Built{std::move(build_cube3d(cfg.n).source), true, 3, std::nullopt};
  }
  if (cfg.problem == "sphere") {
    require(cfg.n >= 0 && cfg.n <= 8, "config: sphere refinement level out of range");
    SphereProblem sp = build_sphere_dlp(static_cast<int>(cfg.n));
    return Built{std::move(sp.source), false, 3, std::move(sp.mesh)};
  }
  if (cfg.problem == "gaussian-spd") {
    require(cfg.n >= 2, "config: gaussian-spd needs n >= 2 points");
    PointSet pts = random_points(3, cfg.n, mix_seed(cfg.seed, 11));
    return Built{std::move(build_gaussian_spd(pts, cfg.sigma, cfg.ridge).source), true, 3,
                 std::nullopt};
  }
  throw Error("config: unknown problem '" + cfg.problem + "'");
}

}  // namespace

RunReport run_benchmark(const RunConfig& cfg) {
  require(cfg.eps > 0.0, "config: eps must be positive");
  require(cfg.method == "rs-s" || cfg.method == "rs-ws",
          "config: method must be rs-s or rs-ws");
  for (const std::string& m : cfg.metrics)
    require(m == "e_a" || m == "e_s" || m == "n_i" || m == "e_p" || m == "logdet",
            "config: unknown metric '" + m + "'");
  if (cfg.metrics.count("e_p"))
    require(cfg.problem == "sphere", "config: e_p applies only to the sphere problem");
  if (cfg.metrics.count("n_i"))
    require(cfg.problem != "sphere",
            "config: no iterative path for the unsymmetric sphere problem");

  Built built = build(cfg);
  MatrixSource& src = built.source;
  const Index n = src.size();
  if (cfg.metrics.count("e_a") || cfg.metrics.count("e_s") || cfg.metrics.count("n_i"))
    require(n <= cfg.dense_limit,
            "config: dense-oracle metrics requested beyond the size guard");
  if (cfg.metrics.count("logdet")) require(built.spd, "config: logdet needs an spd problem");

  const Index n_occ = cfg.n_occ > 0 ? cfg.n_occ : default_nocc(cfg.problem);
  Tree tree = Tree::build(src.points(), n_occ);

  FactorOptions fopts;
  fopts.eps = cfg.eps;
  fopts.n_proxy = cfg.n_proxy > 0 ? cfg.n_proxy : default_nproxy(built.dim);
  fopts.spd = built.spd;
  fopts.validate = cfg.validate;

  RunReport rep;
  rep.n = n;
  rep.method = cfg.method;
  rep.eps = cfg.eps;

  const auto t0 = Clock::now();
  Factorization fac = cfg.method == "rs-s" ? factor_rss(src, tree, fopts)
                                           : factor_rsws(src, tree, fopts);
  rep.t_factor = seconds_since(t0);
  rep.m_f = fac.bytes();
  rep.k_levels = fac.skeleton_counts();

  const Vector probe = seeded_gaussian(n, mix_seed(cfg.seed, 21));
  {
    const auto t1 = Clock::now();
    (void)fac.solve(probe);
    rep.t_solve = seconds_since(t1);
  }

  const bool need_dense =
      cfg.metrics.count("e_a") || cfg.metrics.count("e_s") || cfg.metrics.count("n_i");
  std::optional<LinOp> kop;
  if (need_dense) {
    IdList all(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    Matrix k(n, n);
    k = src.base_entries(all, all);
    kop = linop_from_dense(std::move(k));
  }

  if (cfg.metrics.count("e_a")) {
    const auto diff = est_opnorm_diff(*kop, linop_from_factorization_apply(fac), 1e-2,
                                      mix_seed(cfg.seed, 31));
    const auto knorm = est_opnorm(*kop, 1e-2, mix_seed(cfg.seed, 32));
    rep.e_a = diff.value / knorm.value;
  }
  if (cfg.metrics.count("e_s")) {
    const auto op = linop_identity_minus(
        linop_compose(*kop, linop_from_factorization_solve(fac)));
    rep.e_s = est_opnorm(op, 1e-2, mix_seed(cfg.seed, 33)).value;
  }
  if (cfg.metrics.count("n_i")) {
    const Vector x = seeded_gaussian(n, mix_seed(cfg.seed, 41));
    const Vector b = kop->forward(x);
    const LinOp minv = linop_from_factorization_solve(fac);
    const auto r = pcg_solve(*kop, &minv, b, 1e-12, 200);
    rep.n_i = r.iterations;
  }
  if (cfg.metrics.count("e_p")) {
    const HarmonicTest ht = make_harmonic_test(mix_seed(cfg.seed, 51));
    const Vector f = harmonic_boundary_data(*built.mesh, ht);
    const Vector u = fac.solve(f);
    const auto e = harmonic_field_error(*built.mesh, ht, u);
    require(e.has_value(), "benchmark: harmonic field vanished");
    rep.e_p = *e;
  }
  if (cfg.metrics.count("logdet")) rep.logdet = fac.logdet();
  return rep;
}

namespace {

std::string opt_str(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(17);
  os << *v;
  return os.str();
}

}  // namespace

std::string csv_header() { return "N,method,eps,t_f,t_s,m_f,e_a,e_s,n_i,e_p,k_levels"; }

void emit_report_csv(std::ostream& os, const RunReport& r, bool with_header) {
  if (with_header) os << csv_header() << "\n";
  os.precision(17);
  os << r.n << "," << r.method << "," << r.eps << "," << r.t_factor << "," << r.t_solve
     << "," << r.m_f << "," << opt_str(r.e_a) << "," << opt_str(r.e_s) << ",";
  if (r.n_i) os << *r.n_i;
  os << "," << opt_str(r.e_p) << ",";
  for (std::size_t i = 0; i < r.k_levels.size(); ++i) {
    if (i) os << ";";
    os << r.k_levels[i];
  }
  os << "\n";
}

void emit_report_json(std::ostream& os, const RunReport& r) {
  nlohmann::json j;
  j["N"] = r.n;
  j["method"] = r.method;
  j["eps"] = r.eps;
  j["t_f"] = r.t_factor;
  j["t_s"] = r.t_solve;
  j["m_f"] = r.m_f;
  j["e_a"] = r.e_a ? nlohmann::json(*r.e_a) : nlohmann::json();
  j["e_s"] = r.e_s ? nlohmann::json(*r.e_s) : nlohmann::json();
  j["n_i"] = r.n_i ? nlohmann::json(*r.n_i) : nlohmann::json();
  j["e_p"] = r.e_p ? nlohmann::json(*r.e_p) : nlohmann::json();
  j["logdet"] = r.logdet ? nlohmann::json(*r.logdet) : nlohmann::json();
  j["k_levels"] = r.k_levels;
  os << j.dump() << "\n";
}

}  // namespace skelfac
