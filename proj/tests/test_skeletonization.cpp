#include <doctest.h>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "skelfac/problems.hpp"
#include "skelfac/skeletonization.hpp"

using namespace skelfac;
using test::conjugate_dense;
using test::spectral_norm;

namespace {

struct GridFixture {
  Tree tree;
  MatrixSource source;
};

GridFixture laplace_grid(Index n, Index n_occ) {
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

Matrix full_matrix(const MatrixSource& src) {
  IdList all(static_cast<std::size_t>(src.size()));
  for (Index i = 0; i < src.size(); ++i) all[static_cast<std::size_t>(i)] = i;
  return src.entries(all, all);
}

// Norm of the rows/columns coupling R to everything outside `keep`.
double decoupling_residual(const Matrix& m, const IdList& redundant,
                           const std::set<Index>& keep) {
  double worst = 0.0;
  for (Index r : redundant) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (keep.count(j)) continue;
      worst = std::max(worst, std::abs(m(r, j)));
      worst = std::max(worst, std::abs(m(j, r)));
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE_BEGIN("skeletonization");

TEST_CASE("interval sketch: one strong step decouples the redundant set") {
  auto sk = test::build_line_sketch(256, 32);
  ActiveState state = ActiveState::make(sk.tree);
  const Matrix k0 = full_matrix(sk.source);
  const double knorm = spectral_norm(k0);

  SkelOptions opts;
  opts.eps = 1e-6;
  opts.n_proxy = 64;

  const Index b1 = sk.tree.level_boxes(1).front();
  const SkelFactor f = strong_skeletonize(sk.source, sk.tree, state, b1, opts);
  REQUIRE(!f.trivial());

  // Dense oracle: conjugating the original matrix by the stored operators
  // must zero the redundant rows/columns outside their diagonal block.
  const Matrix a1 = conjugate_dense(f, k0);
  std::set<Index> keep(f.redundant.begin(), f.redundant.end());
  CHECK(decoupling_residual(a1, f.redundant, keep) <= 50.0 * opts.eps * knorm);

  // The redundant diagonal block of the oracle matrix matches the stored
  // pivot (apply it to basis vectors).
  for (std::size_t i = 0; i < f.redundant.size(); ++i)
    for (std::size_t j = 0; j < f.redundant.size(); ++j) {
      Matrix e = Matrix::Zero(static_cast<Index>(f.redundant.size()), 1);
      e(static_cast<Index>(j), 0) = 1.0;
      CHECK(a1(f.redundant[i], f.redundant[j]) ==
            doctest::Approx(f.pivot.multiply(e)(static_cast<Index>(i), 0))
                .epsilon(1e-10));
    }

  // entries() now reproduces the oracle matrix on active pairs: the
  // skeleton-to-near block differs from the raw kernel but matches the
  // conjugated matrix.
  const auto nbrs = sk.tree.box_neighbors(b1);
  REQUIRE(!nbrs.empty());
  IdList n1;
  for (Index d : sk.tree.box(nbrs.front()).dof_ids)
    if (state.is_active(d)) n1.push_back(d);
  const Matrix got = sk.source.entries(f.skeleton, n1);
  Matrix oracle(static_cast<Index>(f.skeleton.size()), static_cast<Index>(n1.size()));
  Matrix raw = sk.source.base_entries(f.skeleton, n1);
  for (std::size_t i = 0; i < f.skeleton.size(); ++i)
    for (std::size_t j = 0; j < n1.size(); ++j)
      oracle(static_cast<Index>(i), static_cast<Index>(j)) =
          a1(f.skeleton[i], n1[j]);
  CHECK((got - oracle).norm() <= 1e-12 * knorm);
  CHECK((got - raw).norm() > 1e-9 * knorm);  // genuinely modified
  CHECK(state.num_active == sk.tree.num_points() - static_cast<Index>(f.redundant.size()));
}

TEST_CASE("interval sketch: full first level keeps the structure theorems") {
  auto sk = test::build_line_sketch(256, 32);
  ActiveState state = ActiveState::make(sk.tree);
  const Matrix k0 = full_matrix(sk.source);
  const double knorm = spectral_norm(k0);

  SkelOptions opts;
  opts.eps = 1e-6;
  opts.n_proxy = 64;

  Matrix a = k0;
  IdList all_redundant;
  for (Index box_id : sk.tree.level_boxes(1)) {
    CHECK(sk.source.cache_respects_far_field(sk.tree, state, box_id));
    const SkelFactor f = strong_skeletonize(sk.source, sk.tree, state, box_id, opts);
    if (!f.trivial()) {
      a = conjugate_dense(f, a);
      all_redundant.insert(all_redundant.end(), f.redundant.begin(), f.redundant.end());
    }
  }
  // After the sweep every redundant set is decoupled from everything else.
  CHECK(!all_redundant.empty());
  std::set<Index> keep(all_redundant.begin(), all_redundant.end());
  for (Index r : all_redundant)
    for (Index j = 0; j < a.cols(); ++j) {
      if (j == r) continue;
      if (!keep.count(j)) {
        CHECK(std::abs(a(r, j)) <= 100.0 * opts.eps * knorm);
        CHECK(std::abs(a(j, r)) <= 100.0 * opts.eps * knorm);
      }
    }

  // Promotion to the next level: pairs re-keyed to the interval parents
  // and all far-field blocks at the new level are raw kernel values.
  sk.source.promote_level(sk.tree, state, 1);
  CHECK(sk.source.far_field_unmodified(sk.tree, state, 2));
  for (const UpdateBlock& blk : sk.source.cache()) {
    CHECK(blk.level == 2);
    const Box& rb = sk.tree.box(blk.row_box);
    const Box& cb = sk.tree.box(blk.col_box);
    CHECK((rb.center - cb.center).lpNorm<Eigen::Infinity>() <=
          0.5 * (rb.side + cb.side) + 1e-9);
  }
}

TEST_CASE("grid: a strong step writes corrections between non-adjacent neighbors") {
  auto fix = laplace_grid(32, 16);  // 8x8 boxes
  ActiveState state = ActiveState::make(fix.tree);
  const Matrix k0 = full_matrix(fix.source);

  Index center = -1;
  for (Index b : fix.tree.level_boxes(1))
    if (fix.tree.box_neighbors(b).size() == 8) {
      center = b;
      break;
    }
  REQUIRE(center >= 0);

  SkelOptions opts;
  opts.eps = 1e-8;
  opts.n_proxy = 64;
  const SkelFactor f = strong_skeletonize(fix.source, fix.tree, state, center, opts);
  REQUIRE(!f.trivial());

  // Corner neighbors of the center box are two boxes apart from each
  // other, yet must exchange a Schur correction.
  const auto nbrs = fix.tree.box_neighbors(center);
  bool found_separated_pair = false;
  for (const UpdateBlock& blk : fix.source.cache()) {
    if (blk.row_box == blk.col_box) continue;
    const Box& rb = fix.tree.box(blk.row_box);
    const Box& cb = fix.tree.box(blk.col_box);
    const double gap = (rb.center - cb.center).lpNorm<Eigen::Infinity>();
    if (gap > rb.side * 1.5) {
      // not box-adjacent; both must be neighbors of the creating box
      CHECK(std::count(nbrs.begin(), nbrs.end(), blk.row_box) == 1);
      CHECK(std::count(nbrs.begin(), nbrs.end(), blk.col_box) == 1);
      found_separated_pair = true;
    }
  }
  CHECK(found_separated_pair);

  // The updated near-field entries match the dense conjugation oracle.
  const Matrix a1 = conjugate_dense(f, k0);
  IdList near_active;
  for (Index d : f.nearf) near_active.push_back(d);
  const Matrix got = fix.source.entries(near_active, near_active);
  Matrix oracle(got.rows(), got.cols());
  for (Index i = 0; i < got.rows(); ++i)
    for (Index j = 0; j < got.cols(); ++j)
      oracle(i, j) = a1(near_active[static_cast<std::size_t>(i)],
                        near_active[static_cast<std::size_t>(j)]);
  CHECK((got - oracle).norm() <= 1e-11 * spectral_norm(k0));
}

TEST_CASE("weak skeletons are at least as large as strong ones") {
  auto fix_w = laplace_grid(32, 64);  // 1024 points, 16 boxes
  auto fix_s = laplace_grid(32, 64);
  ActiveState st_w = ActiveState::make(fix_w.tree);
  ActiveState st_s = ActiveState::make(fix_s.tree);
  SkelOptions opts;
  opts.eps = 1e-6;
  opts.n_proxy = 64;
  const Index box_id = fix_w.tree.level_boxes(1).front();
  const SkelFactor fw = weak_skeletonize(fix_w.source, fix_w.tree, st_w, box_id, opts);
  const SkelFactor fs = strong_skeletonize(fix_s.source, fix_s.tree, st_s, box_id, opts);
  CHECK(fw.skeleton.size() >= fs.skeleton.size());
  CHECK(fw.nearf.empty());
  CHECK(!fs.nearf.empty());
  // Weak corrections never leave the box.
  for (const UpdateBlock& blk : fix_w.source.cache()) {
    CHECK(blk.row_box == box_id);
    CHECK(blk.col_box == box_id);
  }
}

TEST_CASE("weak step decouples the redundant set against everything") {
  auto fix = laplace_grid(32, 64);
  ActiveState state = ActiveState::make(fix.tree);
  const Matrix k0 = full_matrix(fix.source);
  SkelOptions opts;
  opts.eps = 1e-6;
  opts.n_proxy = 64;
  const Index box_id = fix.tree.level_boxes(1).front();
  const SkelFactor f = weak_skeletonize(fix.source, fix.tree, state, box_id, opts);
  REQUIRE(!f.trivial());
  const Matrix a1 = conjugate_dense(f, k0);
  std::set<Index> keep(f.redundant.begin(), f.redundant.end());
  CHECK(decoupling_residual(a1, f.redundant, keep) <=
        100.0 * opts.eps * spectral_norm(k0));
}

TEST_CASE("numerically diagonal kernel yields empty skeletons and no updates") {
  PointSet pts = random_points(2, 64, 9);
  KernelSpec spec;
  spec.dim = 2;
  spec.kind = KernelKind::GaussianTest;
  spec.sigma = 1e-9;  // off-diagonal underflows to exact zero
  MatrixSource src(spec, pts, Vector::Constant(64, 1.0));
  Tree tree = Tree::build(pts, 8);
  ActiveState state = ActiveState::make(tree);
  SkelOptions opts;
  opts.eps = 1e-12;
  opts.n_proxy = 16;
  REQUIRE(tree.num_levels() >= 3);
  for (Index box_id : tree.level_boxes(1)) {
    const SkelFactor f = strong_skeletonize(src, tree, state, box_id, opts);
    CHECK(f.skeleton.empty());
    CHECK(f.interp.size() == 0);
    for (std::size_t i = 0; i < f.redundant.size(); ++i) {
      Matrix e = Matrix::Zero(static_cast<Index>(f.redundant.size()), 1);
      e(static_cast<Index>(i), 0) = 1.0;
      CHECK(f.pivot.multiply(e)(static_cast<Index>(i), 0) == doctest::Approx(1.0));
    }
  }
  CHECK(src.cache().empty());
}

TEST_CASE("isolated box: weak step absorbs everything into the pivot") {
  PointSet pts = random_points(2, 16, 5);
  KernelSpec spec;
  spec.dim = 2;
  spec.kind = KernelKind::GaussianTest;
  spec.sigma = 0.5;
  MatrixSource src(spec, pts, Vector::Constant(16, 2.0));
  Tree tree = Tree::build(pts, 32);  // single box
  REQUIRE(tree.num_boxes() == 1);
  ActiveState state = ActiveState::make(tree);
  SkelOptions opts;
  opts.eps = 1e-10;
  const SkelFactor f = weak_skeletonize(src, tree, state, tree.root(), opts);
  CHECK(f.skeleton.empty());
  CHECK(f.redundant.size() == 16);
  CHECK(state.num_active == 0);
}

TEST_SUITE_END();
