#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "skelfac/matrixsource.hpp"

using namespace skelfac;

namespace {

constexpr double kPi = 3.14159265358979323846;

MatrixSource two_point_source(KernelKind kind, int dim, double separation) {
  Eigen::Matrix3Xd coords(3, 2);
  coords.col(0).setZero();
  coords.col(1) = Eigen::Vector3d(separation, 0.0, 0.0);
  PointSet pts = make_point_set(dim, coords);
  KernelSpec spec;
  spec.dim = dim;
  spec.kind = kind;
  return MatrixSource(spec, pts, Vector::Zero(2));
}

struct GridFixture {
  Tree tree;
  MatrixSource source;
};

GridFixture grid_fixture(Index n, Index n_occ) {
  Eigen::Matrix3Xd coords(3, n * n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      const Index id = j * n + i;
      coords(0, id) = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      coords(1, id) = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
      coords(2, id) = 0.0;
    }
  PointSet pts = make_point_set(2, coords);
  KernelSpec spec;
  spec.dim = 2;
  spec.kind = KernelKind::Laplace2dLog;
  spec.weight = 1.0 / static_cast<double>(n * n);
  Vector diag = Vector::Constant(n * n, 1.0);
  return GridFixture{Tree::build(pts, n_occ), MatrixSource(spec, pts, std::move(diag))};
}

}  // namespace

TEST_SUITE_BEGIN("matrixsource");

TEST_CASE("log kernel vanishes at unit separation") {
  const auto src = two_point_source(KernelKind::Laplace2dLog, 2, 1.0);
  CHECK(src.base_entry(0, 1) == 0.0);
  CHECK(src.base_entry(1, 0) == 0.0);
}

TEST_CASE("3D kernel at unit separation with unit weight") {
  const auto src = two_point_source(KernelKind::Laplace3d, 3, 1.0);
  CHECK(src.base_entry(0, 1) == doctest::Approx(1.0 / (4.0 * kPi)).epsilon(1e-15));
}

TEST_CASE("entries are deterministic and symmetric for even kernels") {
  auto fix = grid_fixture(16, 16);
  IdList I, J;
  for (Index i = 0; i < 40; ++i) I.push_back(i * 3 % 256);
  for (Index j = 0; j < 30; ++j) J.push_back(j * 7 % 256);
  const Matrix a = fix.source.entries(I, J);
  const Matrix b = fix.source.entries(I, J);
  CHECK((a - b).norm() == 0.0);  // bitwise identical
  const Matrix at = fix.source.entries(J, I);
  CHECK((a - at.transpose()).norm() == 0.0);  // exact symmetry
}

TEST_CASE("zero and additive corrections") {
  auto fix = grid_fixture(16, 16);
  const Index b0 = fix.tree.level_boxes(1).front();
  const IdList ids(fix.tree.box(b0).dof_ids.begin(),
                   fix.tree.box(b0).dof_ids.begin() + 4);
  const Matrix before = fix.source.entries(ids, ids);

  // Zero corrections are dropped entirely.
  fix.source.add_update(fix.tree, b0, b0, b0, ids, ids, Matrix::Zero(4, 4));
  CHECK(fix.source.cache().empty());
  CHECK((fix.source.entries(ids, ids) - before).norm() == 0.0);

  const Matrix c1 = test::gaussian_matrix(4, 4, 3);
  const Matrix c2 = test::gaussian_matrix(4, 4, 4);
  fix.source.add_update(fix.tree, b0, b0, b0, ids, ids, c1);
  const Matrix want1 = before + c1;
  CHECK((fix.source.entries(ids, ids) - want1).norm() == 0.0);
  fix.source.add_update(fix.tree, b0, b0, b0, ids, ids, c2);
  const Matrix want2 = before + c1 + c2;
  CHECK((fix.source.entries(ids, ids) - want2).norm() == 0.0);
  // Base entries never see corrections.
  CHECK((fix.source.base_entries(ids, ids) - before).norm() == 0.0);
}

TEST_CASE("corrections outside the creator stencil are rejected") {
  auto fix = grid_fixture(32, 16);  // 8x8 boxes
  const auto& level1 = fix.tree.level_boxes(1);
  // Find two boxes far apart (opposite corners).
  const Index a = level1.front();
  Index far = -1;
  for (Index b : level1) {
    if ((fix.tree.box(b).center - fix.tree.box(a).center).norm() > 0.8) far = b;
  }
  REQUIRE(far >= 0);
  IdList ra(fix.tree.box(a).dof_ids.begin(), fix.tree.box(a).dof_ids.begin() + 2);
  IdList rf(fix.tree.box(far).dof_ids.begin(), fix.tree.box(far).dof_ids.begin() + 2);
  CHECK_THROWS_AS(
      fix.source.add_update(fix.tree, a, a, far, ra, rf, Matrix::Ones(2, 2)), Error);
}

TEST_CASE("bound active state gates entry access") {
  auto fix = grid_fixture(16, 16);
  ActiveState state = ActiveState::make(fix.tree);
  const IdList probe{0, 1, 2};
  fix.source.bind_active(&state);
  CHECK_NOTHROW(fix.source.entries(probe, probe));
  state.deactivate({1});
  CHECK_THROWS_AS(fix.source.entries(probe, probe), Error);
  fix.source.bind_active(nullptr);
  CHECK_NOTHROW(fix.source.entries(probe, probe));
}

TEST_CASE("promote with an empty cache stays empty") {
  auto fix = grid_fixture(16, 16);
  const ActiveState state = ActiveState::make(fix.tree);
  fix.source.promote_level(fix.tree, state, 1);
  CHECK(fix.source.cache().empty());
}

TEST_CASE("promote restricts, re-keys and merges") {
  auto fix = grid_fixture(32, 16);  // 8x8 boxes at level 1
  ActiveState state = ActiveState::make(fix.tree);
  // Two sibling boxes under one parent.
  Index parent = -1, a = -1, b = -1;
  for (Index p : fix.tree.level_boxes(2)) {
    if (fix.tree.box(p).children.size() >= 2) {
      parent = p;
      a = fix.tree.box(p).children[0];
      b = fix.tree.box(p).children[1];
      break;
    }
  }
  REQUIRE(parent >= 0);
  IdList ia(fix.tree.box(a).dof_ids.begin(), fix.tree.box(a).dof_ids.begin() + 3);
  IdList ib(fix.tree.box(b).dof_ids.begin(), fix.tree.box(b).dof_ids.begin() + 3);
  // Creator a: siblings touch, so both updates are stencil-legal.
  fix.source.add_update(fix.tree, a, a, b, ia, ib, Matrix::Ones(3, 3));
  fix.source.add_update(fix.tree, a, a, b, {ia[0], ia[1]}, {ib[0]}, Matrix::Ones(2, 1));

  // One DOF goes inactive before promotion.
  state.deactivate({ia[2]});
  fix.source.promote_level(fix.tree, state, 1);

  REQUIRE(fix.source.cache().size() == 1);  // merged: same key pair
  const UpdateBlock& blk = fix.source.cache().front();
  CHECK(blk.row_box == parent);
  CHECK(blk.col_box == parent);
  CHECK(blk.level == 2);
  CHECK(blk.rows.size() == 2);  // inactive DOF dropped
  CHECK(blk.cols.size() == 3);
  // Merged values: the overlapping entry accumulated both corrections.
  const IdList q{ia[0]};
  const Matrix e = fix.source.entries(q, {ib[0]});
  const Matrix base = fix.source.base_entries(q, {ib[0]});
  CHECK(e(0, 0) - base(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("cache scans accept stencil-legal updates everywhere") {
  auto fix = grid_fixture(32, 16);
  ActiveState state = ActiveState::make(fix.tree);
  Index center = -1;
  for (Index b : fix.tree.level_boxes(1)) {
    if (fix.tree.box_neighbors(b).size() != 8) continue;
    std::set<Index> owners;
    const auto part = active_dof_sets(fix.tree, state, b);
    owners.insert(part.annulus_owner.begin(), part.annulus_owner.end());
    if (owners.size() == 16) {
      center = b;
      break;
    }
  }
  REQUIRE(center >= 0);
  const auto nbrs = fix.tree.box_neighbors(center);
  const Index n0 = nbrs.front();
  IdList ic(fix.tree.box(center).dof_ids.begin(),
            fix.tree.box(center).dof_ids.begin() + 2);
  IdList in(fix.tree.box(n0).dof_ids.begin(), fix.tree.box(n0).dof_ids.begin() + 2);
  fix.source.add_update(fix.tree, center, center, n0, ic, in, Matrix::Ones(2, 2));

  for (Index b : fix.tree.level_boxes(1))
    CHECK(fix.source.cache_respects_far_field(fix.tree, state, b));
}

TEST_SUITE_END();
