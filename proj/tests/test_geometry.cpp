#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "skelfac/geometry.hpp"

using namespace skelfac;

namespace {

PointSet grid2d(Index n) {
  Eigen::Matrix3Xd coords(3, n * n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      const Index id = j * n + i;
      coords(0, id) = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      coords(1, id) = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
      coords(2, id) = 0.0;
    }
  return make_point_set(2, coords);
}

PointSet grid3d(Index n) {
  Eigen::Matrix3Xd coords(3, n * n * n);
  for (Index k = 0; k < n; ++k)
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) {
        const Index id = (k * n + j) * n + i;
        coords(0, id) = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        coords(1, id) = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
        coords(2, id) = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
      }
  return make_point_set(3, coords);
}

}  // namespace

TEST_SUITE_BEGIN("geometry");

TEST_CASE("single point gives a single-box tree") {
  Eigen::Matrix3Xd coords(3, 1);
  coords.col(0) = Eigen::Vector3d(0.3, 0.4, 0.0);
  const Tree tree = Tree::build(make_point_set(2, coords), 64);
  CHECK(tree.num_boxes() == 1);
  CHECK(tree.num_levels() == 1);
  CHECK(tree.box(tree.root()).is_leaf());
}

TEST_CASE("uniform 32x32 grid with n_occ 64 refines to 16 leaves over 3 levels") {
  const Tree tree = Tree::build(grid2d(32), 64);
  CHECK(tree.num_levels() == 3);
  Index leaves = 0;
  for (Index b = 0; b < tree.num_boxes(); ++b) {
    if (!tree.box(b).is_leaf()) continue;
    ++leaves;
    CHECK(tree.box(b).dof_ids.size() == 64);
    CHECK(tree.box(b).level == 1);
  }
  CHECK(leaves == 16);
}

TEST_CASE("empty point set and bad occupancy are rejected") {
  Eigen::Matrix3Xd coords(3, 1);
  coords.col(0).setZero();
  CHECK_THROWS_AS(Tree::build(make_point_set(2, coords), 0), Error);
  Eigen::Matrix3Xd empty(3, 0);
  CHECK_THROWS_AS(make_point_set(2, empty), Error);
}

TEST_CASE("clustered points refine only near the cluster") {
  // Points spread thinly plus a dense corner cluster.
  const Index n_sparse = 40, n_cluster = 200;
  Eigen::Matrix3Xd coords(3, n_sparse + n_cluster);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (Index i = 0; i < n_sparse; ++i)
    coords.col(i) = Eigen::Vector3d(uni(rng), uni(rng), 0.0);
  for (Index i = 0; i < n_cluster; ++i)
    coords.col(n_sparse + i) =
        Eigen::Vector3d(0.05 * uni(rng), 0.05 * uni(rng), 0.0);
  const Tree tree = Tree::build(make_point_set(2, coords), 16);

  // Exhaustive occupancy check plus leaf-level spread (adaptivity).
  std::set<int> leaf_levels;
  IdList covered;
  for (Index b = 0; b < tree.num_boxes(); ++b) {
    const Box& box = tree.box(b);
    if (!box.is_leaf()) continue;
    CHECK(box.dof_ids.size() <= 16);
    leaf_levels.insert(box.level);
    covered.insert(covered.end(), box.dof_ids.begin(), box.dof_ids.end());
  }
  CHECK(leaf_levels.size() > 1);
  std::sort(covered.begin(), covered.end());
  CHECK(covered.size() == static_cast<std::size_t>(n_sparse + n_cluster));
  CHECK(std::adjacent_find(covered.begin(), covered.end()) == covered.end());
}

TEST_CASE("traversal order is bottom-up level by level") {
  const Tree tree = Tree::build(grid2d(32), 64);
  // Build the global ordering and check level monotonicity.
  int last_level = 1;
  for (int level = 1; level <= tree.num_levels(); ++level) {
    for (Index b : tree.level_boxes(level)) {
      CHECK(tree.box(b).level == level);
      CHECK(level >= last_level);
      last_level = level;
    }
  }
  // Every box appears exactly once across levels.
  Index total = 0;
  for (int level = 1; level <= tree.num_levels(); ++level)
    total += static_cast<Index>(tree.level_boxes(level).size());
  CHECK(total == tree.num_boxes());
}

TEST_CASE("neighbor stencils on a uniform 2D level") {
  const Tree tree = Tree::build(grid2d(32), 64);  // 4x4 boxes at level 1
  Index interior = 0, corner = 0;
  for (Index b : tree.level_boxes(1)) {
    const auto nbrs = tree.box_neighbors(b);
    const Eigen::Vector3d c = tree.box(b).center;
    const bool x_edge = c[0] < 0.25 || c[0] > 0.75;
    const bool y_edge = c[1] < 0.25 || c[1] > 0.75;
    if (!x_edge && !y_edge) {
      CHECK(nbrs.size() == 8);
      ++interior;
    }
    if (x_edge && y_edge) {
      CHECK(nbrs.size() == 3);
      ++corner;
    }
    CHECK(std::is_sorted(nbrs.begin(), nbrs.end()));
  }
  CHECK(interior == 4);
  CHECK(corner == 4);
  CHECK_THROWS_AS(tree.box_neighbors(tree.num_boxes()), Error);
}

TEST_CASE("interior 3D box has 26 neighbors") {
  const Tree tree = Tree::build(grid3d(16), 64);  // 4x4x4 boxes at level 1
  bool found_interior = false;
  for (Index b : tree.level_boxes(1)) {
    const Eigen::Vector3d c = tree.box(b).center;
    const bool interior = c[0] > 0.25 && c[0] < 0.75 && c[1] > 0.25 && c[1] < 0.75 &&
                          c[2] > 0.25 && c[2] < 0.75;
    if (interior) {
      CHECK(tree.box_neighbors(b).size() == 26);
      found_interior = true;
    }
  }
  CHECK(found_interior);
}

TEST_CASE("dof partition on a fresh uniform grid") {
  const Tree tree = Tree::build(grid2d(32), 16);  // 8x8 boxes at level 1
  const ActiveState state = ActiveState::make(tree);
  // Pick an interior box (full 3x3 ring): annulus owners must then be the
  // 16 boxes of the 5x5 ring.
  for (Index b : tree.level_boxes(1)) {
    if (tree.box_neighbors(b).size() != 8) continue;
    const Eigen::Vector3d c = tree.box(b).center;
    const double w = tree.box(b).side;
    const bool deep_interior = c[0] > 2.0 * w && c[0] < 1.0 - 2.0 * w &&
                               c[1] > 2.0 * w && c[1] < 1.0 - 2.0 * w;
    if (!deep_interior) continue;
    const DofPartition part = active_dof_sets(tree, state, b);
    CHECK(part.box.size() == 16);  // nothing inactive yet
    CHECK(part.near.size() == 8 * 16);
    std::set<Index> owners(part.annulus_owner.begin(), part.annulus_owner.end());
    CHECK(owners.size() == 16);
    CHECK(part.annulus.size() == 16 * 16);
    // Partition property: box/near/annulus/far/inactive covers everything.
    const IdList far = far_beyond_annulus(tree, state, b);
    CHECK(part.box.size() + part.near.size() + part.annulus.size() + far.size() ==
          static_cast<std::size_t>(tree.num_points()));
    std::set<Index> all;
    all.insert(part.box.begin(), part.box.end());
    all.insert(part.near.begin(), part.near.end());
    all.insert(part.annulus.begin(), part.annulus.end());
    all.insert(far.begin(), far.end());
    CHECK(all.size() == static_cast<std::size_t>(tree.num_points()));
    return;
  }
  FAIL("interior box not found");
}

TEST_CASE("dof partition respects deactivation") {
  const Tree tree = Tree::build(grid2d(16), 16);
  ActiveState state = ActiveState::make(tree);
  const Index b0 = tree.level_boxes(1).front();
  const auto nbrs = tree.box_neighbors(b0);
  REQUIRE(!nbrs.empty());
  const Index b1 = nbrs.front();

  // Mark half of box b0 redundant, as a skeletonization step would.
  const auto& ids = tree.box(b0).dof_ids;
  IdList redundant(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(ids.size() / 2));
  IdList skeleton(ids.begin() + static_cast<std::ptrdiff_t>(ids.size() / 2), ids.end());
  state.deactivate(redundant);
  CHECK(state.num_active == tree.num_points() - static_cast<Index>(redundant.size()));

  const DofPartition part = active_dof_sets(tree, state, b1);
  std::set<Index> near(part.near.begin(), part.near.end());
  for (Index d : redundant) CHECK(!near.count(d));
  for (Index d : skeleton) CHECK(near.count(d));
}

TEST_CASE("proxy circle in 2D") {
  const Tree tree = Tree::build(grid2d(8), 16);
  Box box = tree.box(tree.level_boxes(1).front());
  box.side = 1.0;
  box.center = Eigen::Vector3d(0.5, 0.5, 0.0);
  const PointSet proxy = proxy_points(box, 4);
  REQUIRE(proxy.size() == 4);
  for (Index k = 0; k < 4; ++k) {
    const double r = (proxy.point(k) - box.center).norm();
    CHECK(r == doctest::Approx(2.5).epsilon(1e-14));
  }
  // 90 degrees apart.
  const Eigen::Vector3d d0 = (proxy.point(0) - box.center).normalized();
  const Eigen::Vector3d d1 = (proxy.point(1) - box.center).normalized();
  CHECK(std::abs(d0.dot(d1)) < 1e-12);
  // The proxy circle encloses the whole 3x3 near-field block.
  CHECK(1.5 * std::sqrt(2.0) * box.side < 2.5 * box.side);
}

TEST_CASE("proxy sphere in 3D is seeded and on-radius") {
  const Tree tree = Tree::build(grid3d(8), 64);
  const Box& box = tree.box(tree.level_boxes(1).front());
  const PointSet a = proxy_points(box, 128, 2.5, 99);
  const PointSet b = proxy_points(box, 128, 2.5, 99);
  CHECK((a.coords - b.coords).norm() == 0.0);
  for (Index k = 0; k < a.size(); ++k)
    CHECK((a.point(k) - box.center).norm() ==
          doctest::Approx(2.5 * box.side).epsilon(1e-13));
}

TEST_CASE("owner box tracks levels across an adaptive tree") {
  // Collinear cluster: leaves at several levels.
  const auto sketch = test::build_line_sketch(64, 8);
  const Tree& tree = sketch.tree;
  for (Index p = 0; p < tree.num_points(); p += 7) {
    for (int level = 1; level <= tree.num_levels(); ++level) {
      const Index owner = tree.owner_box(p, level);
      const Box& ob = tree.box(owner);
      CHECK(ob.level >= level);
      if (ob.level > level) CHECK(ob.is_leaf());
      // The point lies inside the owner cube.
      for (int k = 0; k < tree.dim(); ++k)
        CHECK(std::abs(tree.points().point(p)[k] - ob.center[k]) <=
              0.5 * ob.side * (1.0 + 1e-9));
    }
  }
}

TEST_SUITE_END();
