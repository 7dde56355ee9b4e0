#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>

#include "skelfac/matrixsource.hpp"

namespace skelfac {

/// Point discretization of an integral operator: collocation points,
/// quadrature weights and, for surface problems, per-panel normals/areas.
struct Discretization {
  PointSet points;
  Vector weights;
  Eigen::Matrix3Xd normals;  // empty unless surface problem
  Vector areas;              // empty unless surface problem
};

struct BuiltProblem {
  Discretization disc;
  MatrixSource source;
};

/// Closed triangulated surface with consistent outward orientation.
struct TriangleMesh {
  Eigen::Matrix3Xd vertices;
  std::vector<std::array<Index, 3>> triangles;
  Eigen::Matrix3Xd centroids;
  Eigen::Matrix3Xd normals;  // outward unit normals
  Vector areas;
};

struct SphereProblem {
  TriangleMesh mesh;
  Discretization disc;
  MatrixSource source;
};

/// First-kind volume equation on the unit square: log kernel, piecewise
/// constant collocation on an n x n grid, adaptively integrated diagonal.
BuiltProblem build_square2d(Index n_per_side, double diag_tol = 1e-12);

/// The 3D analogue on the unit cube with the 1/r kernel.
BuiltProblem build_cube3d(Index n_per_side, double diag_tol = 1e-10);

/// Second-kind boundary equation on the unit sphere: double-layer kernel,
/// centroid collocation on a subdivided icosahedron (20 * 4^level flat
/// triangles), fourth-order Gauss-Legendre quadrature for panel pairs
/// closer than the average triangle diameter, diagonal -1/2.
SphereProblem build_sphere_dlp(int refinement_level);

/// Gaussian kernel exp(-r^2 / (2 sigma^2)) + ridge on the diagonal; SPD
/// fixture for the square-root and log-determinant paths.
BuiltProblem build_gaussian_spd(const PointSet& points, double sigma, double ridge);

/// Seeded uniform points in the unit square/cube.
PointSet random_points(int dim, Index n, std::uint64_t seed);

TriangleMesh icosphere(int level);
void write_mesh_text(const TriangleMesh& mesh, std::ostream& os);

/// Fourth-order tensor Gauss-Legendre integral of the double-layer kernel
/// over one flat panel (square-to-triangle map, 16 nodes).
double dlp_panel_integral(const Eigen::Vector3d& target, const Eigen::Vector3d& v0,
                          const Eigen::Vector3d& v1, const Eigen::Vector3d& v2,
                          const Eigen::Vector3d& n_source, double area);

/// Self-cell integral of the kernel over one grid cell of width h,
/// computed by adaptive subdivision graded toward the singularity.
double cell_self_integral_log2d(double h, double tol = 1e-12);
double cell_self_integral_inv_r3d(double h, double tol = 1e-10);

/// Adaptive tensor Gauss-Legendre integration over the centered unit cube
/// in `dim` dimensions of an integrand with an integrable singularity at
/// the origin.  `origin_bound(side)` must bound |integral| over an
/// origin-centered cube of the given side.
double adaptive_unit_cell_integral(int dim,
                                   const std::function<double(const Eigen::Vector3d&)>& f,
                                   const std::function<double(double)>& origin_bound,
                                   double tol);

/// Random exterior sources (radius 2), standard normal charges and
/// interior targets (radius 1/2) for the harmonic reconstruction test.
struct HarmonicTest {
  Eigen::Matrix3Xd sources;
  Vector charges;
  Eigen::Matrix3Xd targets;
};

HarmonicTest make_harmonic_test(std::uint64_t seed, Index n_sources = 16,
                                Index n_targets = 16);

/// Boundary trace of the harmonic field at the collocation points.
Vector harmonic_boundary_data(const TriangleMesh& mesh, const HarmonicTest& test);

/// Relative error at the interior targets between the true field and its
/// reconstruction from the solved density.  Empty when the field is
/// identically zero (zero charges).
std::optional<double> harmonic_field_error(const TriangleMesh& mesh,
                                           const HarmonicTest& test, const Vector& density);

}  // namespace skelfac
