#include "skelfac/problems.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>

namespace skelfac {

namespace {

constexpr double kPi = 3.14159265358979323846;

// 4-point Gauss-Legendre nodes/weights on [0,1].
constexpr std::array<double, 4> kGlNode = {
    0.5 - 0.8611363115940526 / 2.0, 0.5 - 0.3399810435848563 / 2.0,
    0.5 + 0.3399810435848563 / 2.0, 0.5 + 0.8611363115940526 / 2.0};
constexpr std::array<double, 4> kGlWeight = {
    0.3478548451374538 / 2.0, 0.6521451548625461 / 2.0, 0.6521451548625461 / 2.0,
    0.3478548451374538 / 2.0};

struct Cell {
  Eigen::Vector3d center;
  double side;
};

double gl_cell(int dim, const std::function<double(const Eigen::Vector3d&)>& f,
               const Cell& c) {
  double sum = 0.0;
  if (dim == 2) {
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        Eigen::Vector3d p(c.center[0] + (kGlNode[a] - 0.5) * c.side,
                          c.center[1] + (kGlNode[b] - 0.5) * c.side, 0.0);
        sum += kGlWeight[a] * kGlWeight[b] * f(p);
      }
    return sum * c.side * c.side;
  }
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int g = 0; g < 4; ++g) {
        Eigen::Vector3d p(c.center[0] + (kGlNode[a] - 0.5) * c.side,
                          c.center[1] + (kGlNode[b] - 0.5) * c.side,
                          c.center[2] + (kGlNode[g] - 0.5) * c.side);
        sum += kGlWeight[a] * kGlWeight[b] * kGlWeight[g] * f(p);
      }
  return sum * c.side * c.side * c.side;
}

std::vector<Cell> split_cell(int dim, const Cell& c) {
  std::vector<Cell> out;
  const int nchild = 1 << dim;
  for (int slot = 0; slot < nchild; ++slot) {
    Cell ch;
    ch.side = 0.5 * c.side;
    ch.center = c.center;
    for (int k = 0; k < dim; ++k)
      ch.center[k] += (slot & (1 << k)) ? 0.25 * c.side : -0.25 * c.side;
    out.push_back(ch);
  }
  return out;
}

// Adaptive integration over one cell whose distance to the singularity is
// at least its own side; subdivision then shrinks the error much faster
// than the budget.
double integrate_regular(int dim, const std::function<double(const Eigen::Vector3d&)>& f,
                         const Cell& c, double budget, int depth) {
  const double coarse = gl_cell(dim, f, c);
  double fine = 0.0;
  const auto children = split_cell(dim, c);
  for (const Cell& ch : children) fine += gl_cell(dim, f, ch);
  if (std::abs(coarse - fine) <= budget || depth > 24) return fine;
  double sum = 0.0;
  for (const Cell& ch : children)
    sum += integrate_regular(dim, f, ch, budget / static_cast<double>(children.size()),
                             depth + 1);
  return sum;
}

}  // namespace

double adaptive_unit_cell_integral(int dim,
                                   const std::function<double(const Eigen::Vector3d&)>& f,
                                   const std::function<double(double)>& origin_bound,
                                   double tol) {
  require(dim == 2 || dim == 3, "adaptive integral: dim must be 2 or 3");
  require(tol > 0.0, "adaptive integral: tol must be positive");

  // Concentric dyadic shells around the origin: the cube of side s splits
  // into a 4^d grid of side s/4 cells, of which the inner 2^d (the cube of
  // side s/2) are deferred to the next shell.  Every shell cell sits at a
  // distance from the origin of at least its own side.
  double total = 0.0;
  double side = 1.0;
  int shell = 0;
  while (origin_bound(0.5 * side) > 0.1 * tol) {
    const double cs = 0.25 * side;
    const int grid = 4;
    const double shell_budget = 0.25 * tol * std::pow(0.5, shell);
    std::vector<Cell> cells;
    for (int a = 0; a < grid; ++a)
      for (int b = 0; b < grid; ++b) {
        if (dim == 2) {
          Cell c{Eigen::Vector3d((a - 1.5) * cs, (b - 1.5) * cs, 0.0), cs};
          if (!(a == 1 || a == 2) || !(b == 1 || b == 2)) cells.push_back(c);
        } else {
          for (int g = 0; g < grid; ++g) {
            Cell c{Eigen::Vector3d((a - 1.5) * cs, (b - 1.5) * cs, (g - 1.5) * cs), cs};
            const bool inner =
                (a == 1 || a == 2) && (b == 1 || b == 2) && (g == 1 || g == 2);
            if (!inner) cells.push_back(c);
          }
        }
      }
    for (const Cell& c : cells)
      total += integrate_regular(dim, f, c,
                                 shell_budget / static_cast<double>(cells.size()), 0);
    side *= 0.5;
    ++shell;
    require(shell < 60, "adaptive integral: singular remainder does not shrink");
  }
  return total;
}

double cell_self_integral_log2d(double h, double tol) {
  // integral over an h-cell of -log|z| / (2 pi): separate the scale so the
  // adaptive pass runs once on the unit cell.
  static const double unit = adaptive_unit_cell_integral(
      2, [](const Eigen::Vector3d& p) { return -std::log(p.norm()) / (2.0 * kPi); },
      [](double s) {
        return s * s * (std::abs(std::log(s)) + 2.0) / (2.0 * kPi);
      },
      1e-13);
  (void)tol;
  return h * h * (unit - std::log(h) / (2.0 * kPi));
}

double cell_self_integral_inv_r3d(double h, double tol) {
  static const double unit = adaptive_unit_cell_integral(
      3, [](const Eigen::Vector3d& p) { return 1.0 / (4.0 * kPi * p.norm()); },
      [](double s) { return 0.375 * s * s; }, 1e-11);
  (void)tol;
  return h * h * unit;
}

BuiltProblem build_square2d(Index n_per_side, double diag_tol) {
  require(n_per_side >= 2, "build_square2d: need at least 2 points per side");
  const Index n = n_per_side;
  const Index total = n * n;
  const double h = 1.0 / static_cast<double>(n);

  Eigen::Matrix3Xd coords(3, total);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      const Index id = j * n + i;
      coords(0, id) = (static_cast<double>(i) + 0.5) * h;
      coords(1, id) = (static_cast<double>(j) + 0.5) * h;
      coords(2, id) = 0.0;
    }
  PointSet pts = make_point_set(2, coords);

  KernelSpec spec;
  spec.dim = 2;
  spec.kind = KernelKind::Laplace2dLog;
  spec.weight = 1.0 / static_cast<double>(total);

  Vector diag = Vector::Constant(total, cell_self_integral_log2d(h, diag_tol));

  Discretization disc;
  disc.points = pts;
  disc.weights = Vector::Constant(total, 1.0 / static_cast<double>(total));
  return BuiltProblem{std::move(disc), MatrixSource(spec, pts, std::move(diag))};
}

BuiltProblem build_cube3d(Index n_per_side, double diag_tol) {
  require(n_per_side >= 2, "build_cube3d: need at least 2 points per side");
  const Index n = n_per_side;
  const Index total = n * n * n;
  const double h = 1.0 / static_cast<double>(n);

  Eigen::Matrix3Xd coords(3, total);
  for (Index k = 0; k < n; ++k)
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) {
        const Index id = (k * n + j) * n + i;
        coords(0, id) = (static_cast<double>(i) + 0.5) * h;
        coords(1, id) = (static_cast<double>(j) + 0.5) * h;
        coords(2, id) = (static_cast<double>(k) + 0.5) * h;
      }
  PointSet pts = make_point_set(3, coords);

  KernelSpec spec;
  spec.dim = 3;
  spec.kind = KernelKind::Laplace3d;
  spec.weight = 1.0 / static_cast<double>(total);

  Vector diag = Vector::Constant(total, cell_self_integral_inv_r3d(h, diag_tol));

  Discretization disc;
  disc.points = pts;
  disc.weights = Vector::Constant(total, 1.0 / static_cast<double>(total));
  return BuiltProblem{std::move(disc), MatrixSource(spec, pts, std::move(diag))};
}

TriangleMesh icosphere(int level) {
  require(level >= 0, "icosphere: level must be nonnegative");
  require(level <= 8, "icosphere: refinement level too deep");

  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<Index, 3>> tris = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<Index, Index>, Index> midpoint;
    auto mid = [&](Index a, Index b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Eigen::Vector3d m = (verts[static_cast<std::size_t>(a)] +
                           verts[static_cast<std::size_t>(b)])
                              .normalized();
      verts.push_back(m);
      const Index id = static_cast<Index>(verts.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<Index, 3>> next;
    next.reserve(tris.size() * 4);
    for (const auto& t : tris) {
      const Index ab = mid(t[0], t[1]);
      const Index bc = mid(t[1], t[2]);
      const Index ca = mid(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }

  TriangleMesh mesh;
  mesh.vertices.resize(3, static_cast<Index>(verts.size()));
  for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices.col(static_cast<Index>(i)) = verts[i];
  mesh.triangles = tris;
  const Index nt = static_cast<Index>(tris.size());
  mesh.centroids.resize(3, nt);
  mesh.normals.resize(3, nt);
  mesh.areas.resize(nt);
  for (Index t = 0; t < nt; ++t) {
    auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const Eigen::Vector3d v0 = mesh.vertices.col(tri[0]);
    const Eigen::Vector3d v1 = mesh.vertices.col(tri[1]);
    const Eigen::Vector3d v2 = mesh.vertices.col(tri[2]);
    const Eigen::Vector3d c = (v0 + v1 + v2) / 3.0;
    Eigen::Vector3d nrm = (v1 - v0).cross(v2 - v0);
    const double a2 = nrm.norm();
    require(a2 > 0.0, "icosphere: degenerate triangle");
    // Enforce outward orientation regardless of base winding.
    if (nrm.dot(c) < 0.0) {
      std::swap(tri[1], tri[2]);
      nrm = -nrm;
    }
    mesh.centroids.col(t) = c;
    mesh.normals.col(t) = nrm / a2;
    mesh.areas[t] = 0.5 * a2;
  }
  return mesh;
}

namespace {

double dlp_kernel(const Eigen::Vector3d& target, const Eigen::Vector3d& source,
                  const Eigen::Vector3d& n_source) {
  const Eigen::Vector3d z = target - source;
  const double r = z.norm();
  return z.dot(n_source) / (4.0 * kPi * r * r * r);
}

}  // namespace

// Fourth-order tensor Gauss-Legendre over a flat triangle via the
// square-to-triangle map y(u,v) = v0 + u (v1 - v0) + u v (v2 - v1).
double dlp_panel_integral(const Eigen::Vector3d& target, const Eigen::Vector3d& v0,
                          const Eigen::Vector3d& v1, const Eigen::Vector3d& v2,
                          const Eigen::Vector3d& n_source, double area) {
  double sum = 0.0;
  for (int a = 0; a < 4; ++a) {
    const double u = kGlNode[a];
    for (int b = 0; b < 4; ++b) {
      const double v = kGlNode[b];
      const Eigen::Vector3d y = v0 + u * (v1 - v0) + u * v * (v2 - v1);
      sum += kGlWeight[a] * kGlWeight[b] * dlp_kernel(target, y, n_source) * 2.0 * area * u;
    }
  }
  return sum;
}

SphereProblem build_sphere_dlp(int refinement_level) {
  TriangleMesh mesh = icosphere(refinement_level);
  const Index n = static_cast<Index>(mesh.triangles.size());

  PointSet pts = make_point_set(3, mesh.centroids);

  KernelSpec spec;
  spec.dim = 3;
  spec.kind = KernelKind::Laplace3dDlp;
  spec.normals = mesh.normals;
  spec.areas = mesh.areas;

  // Flat-panel self term vanishes, so the diagonal is the identity part.
  Vector diag = Vector::Constant(n, -0.5);
  MatrixSource src(spec, pts, std::move(diag));

  // Average triangle diameter sets the near-field quadrature radius.
  double avg_diam = 0.0;
  for (const auto& t : mesh.triangles) {
    const Eigen::Vector3d v0 = mesh.vertices.col(t[0]);
    const Eigen::Vector3d v1 = mesh.vertices.col(t[1]);
    const Eigen::Vector3d v2 = mesh.vertices.col(t[2]);
    avg_diam += std::max({(v1 - v0).norm(), (v2 - v1).norm(), (v0 - v2).norm()});
  }
  avg_diam /= static_cast<double>(n);

  const double r2 = avg_diam * avg_diam;
  for (Index i = 0; i < n; ++i) {
    const Eigen::Vector3d xi = mesh.centroids.col(i);
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if ((mesh.centroids.col(j) - xi).squaredNorm() >= r2) continue;
      const auto& t = mesh.triangles[static_cast<std::size_t>(j)];
      const double q = dlp_panel_integral(xi, mesh.vertices.col(t[0]),
                                            mesh.vertices.col(t[1]), mesh.vertices.col(t[2]),
                                            mesh.normals.col(j), mesh.areas[j]);
      src.set_override(i, j, q);
    }
  }

  Discretization disc;
  disc.points = pts;
  disc.weights = mesh.areas;
  disc.normals = mesh.normals;
  disc.areas = mesh.areas;
  return SphereProblem{std::move(mesh), std::move(disc), std::move(src)};
}

BuiltProblem build_gaussian_spd(const PointSet& points, double sigma, double ridge) {
  require(sigma > 0.0, "build_gaussian_spd: sigma must be positive");
  require(ridge >= 0.0, "build_gaussian_spd: ridge must be nonnegative");
  KernelSpec spec;
  spec.dim = points.dim;
  spec.kind = KernelKind::GaussianTest;
  spec.sigma = sigma;
  Vector diag = Vector::Constant(points.size(), 1.0 + ridge);
  Discretization disc;
  disc.points = points;
  disc.weights = Vector::Ones(points.size());
  return BuiltProblem{std::move(disc), MatrixSource(spec, points, std::move(diag))};
}

PointSet random_points(int dim, Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::Matrix3Xd coords(3, n);
  for (Index i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) coords(k, i) = k < dim ? uni(rng) : 0.0;
  return make_point_set(dim, coords);
}

void write_mesh_text(const TriangleMesh& mesh, std::ostream& os) {
  os << mesh.vertices.cols() << " " << mesh.triangles.size() << "\n";
  os.precision(17);
  for (Index v = 0; v < mesh.vertices.cols(); ++v)
    os << mesh.vertices(0, v) << " " << mesh.vertices(1, v) << " " << mesh.vertices(2, v)
       << "\n";
  for (const auto& t : mesh.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
}

HarmonicTest make_harmonic_test(std::uint64_t seed, Index n_sources, Index n_targets) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto on_sphere = [&](double radius) {
    Eigen::Vector3d d;
    do {
      d = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
    } while (d.norm() < 1e-12);
    return Eigen::Vector3d(radius * d.normalized());
  };
  HarmonicTest t;
  t.sources.resize(3, n_sources);
  t.targets.resize(3, n_targets);
  t.charges.resize(n_sources);
  for (Index j = 0; j < n_sources; ++j) t.sources.col(j) = on_sphere(2.0);
  for (Index j = 0; j < n_sources; ++j) t.charges[j] = gauss(rng);
  for (Index j = 0; j < n_targets; ++j) t.targets.col(j) = on_sphere(0.5);
  return t;
}

namespace {

double harmonic_field(const HarmonicTest& t, const Eigen::Vector3d& x) {
  double v = 0.0;
  for (Index j = 0; j < t.sources.cols(); ++j)
    v += t.charges[j] / (4.0 * kPi * (x - t.sources.col(j)).norm());
  return v;
}

}  // namespace

Vector harmonic_boundary_data(const TriangleMesh& mesh, const HarmonicTest& test) {
  const Index n = mesh.centroids.cols();
  Vector f(n);
  for (Index i = 0; i < n; ++i) f[i] = harmonic_field(test, mesh.centroids.col(i));
  return f;
}

std::optional<double> harmonic_field_error(const TriangleMesh& mesh,
                                           const HarmonicTest& test,
                                           const Vector& density) {
  const Index nt = test.targets.cols();
  Vector truth(nt), recon(nt);
  for (Index k = 0; k < nt; ++k) {
    const Eigen::Vector3d z = test.targets.col(k);
    truth[k] = harmonic_field(test, z);
    double w = 0.0;
    for (Index j = 0; j < mesh.centroids.cols(); ++j)
      w += dlp_kernel(z, mesh.centroids.col(j), mesh.normals.col(j)) * mesh.areas[j] *
           density[j];
    recon[k] = w;
  }
  const double denom = truth.norm();
  if (denom == 0.0) return std::nullopt;
  return (recon - truth).norm() / denom;
}

}  // namespace skelfac
