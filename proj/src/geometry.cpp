#include "skelfac/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace skelfac {

namespace {

constexpr int kMaxDepth = 48;
constexpr double kRelTol = 1e-9;

double inf_dist(const Eigen::Vector3d& a, const Eigen::Vector3d& b, int dim) {
  double d = 0.0;
  for (int k = 0; k < dim; ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

void sort_by_dof(IdList& dofs, IdList& owners) {
  std::vector<std::size_t> order(dofs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return dofs[a] < dofs[b]; });
  IdList d2(dofs.size()), o2(owners.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    d2[k] = dofs[order[k]];
    o2[k] = owners[order[k]];
  }
  dofs.swap(d2);
  owners.swap(o2);
}

}  // namespace

PointSet make_point_set(int dim, const Eigen::Matrix3Xd& coords) {
  require(dim == 2 || dim == 3, "point set: dim must be 2 or 3");
  require(coords.cols() >= 1, "point set: must contain at least one point");
  require(coords.allFinite(), "point set: coordinates must be finite");
  PointSet ps;
  ps.dim = dim;
  ps.coords = coords;
  if (dim == 2) ps.coords.row(2).setZero();
  return ps;
}

Tree Tree::build(const PointSet& points, Index n_occ) {
  require(n_occ >= 1, "build_tree: n_occ must be at least 1");
  require(points.size() >= 1, "build_tree: empty point set");
  require(points.coords.allFinite(), "build_tree: non-finite coordinates");
  require(points.dim == 2 || points.dim == 3, "build_tree: dim must be 2 or 3");

  Tree tree;
  tree.points_ = points;
  if (points.dim == 2) tree.points_.coords.row(2).setZero();

  // Tight bounding cube, expanded by a relative margin so boundary points
  // fall strictly inside.
  Eigen::Vector3d lo = tree.points_.coords.rowwise().minCoeff();
  Eigen::Vector3d hi = tree.points_.coords.rowwise().maxCoeff();
  Eigen::Vector3d center = 0.5 * (lo + hi);
  double ext = 0.0;
  for (int k = 0; k < points.dim; ++k) ext = std::max(ext, hi[k] - lo[k]);
  const double side = ext > 0.0 ? ext * (1.0 + 1e-12) : 1.0;

  const int nchild = 1 << points.dim;
  tree.leaf_of_point_.assign(static_cast<std::size_t>(points.size()), -1);

  std::vector<int> depth_of;
  {
    Box root;
    root.center = center;
    root.side = side;
    root.dim = points.dim;
    root.dof_ids.resize(static_cast<std::size_t>(points.size()));
    std::iota(root.dof_ids.begin(), root.dof_ids.end(), Index{0});
    tree.boxes_.push_back(std::move(root));
    depth_of.push_back(0);
    tree.root_ = 0;
  }

  struct Item {
    Index id;
    int depth;
  };
  std::vector<Item> stack{{0, 0}};
  int max_depth = 0;
  while (!stack.empty()) {
    const Item it = stack.back();
    stack.pop_back();
    max_depth = std::max(max_depth, it.depth);
    const bool split = tree.boxes_[static_cast<std::size_t>(it.id)].dof_ids.size() >
                           static_cast<std::size_t>(n_occ) &&
                       it.depth < kMaxDepth;
    if (!split) {
      for (Index p : tree.boxes_[static_cast<std::size_t>(it.id)].dof_ids)
        tree.leaf_of_point_[static_cast<std::size_t>(p)] = it.id;
      continue;
    }
    std::vector<IdList> buckets(static_cast<std::size_t>(nchild));
    {
      const Box& b = tree.boxes_[static_cast<std::size_t>(it.id)];
      for (Index p : b.dof_ids) {
        int slot = 0;
        // Face ties resolve toward the lower-index child.
        for (int k = 0; k < points.dim; ++k)
          if (tree.points_.coords(k, p) > b.center[k]) slot |= (1 << k);
        buckets[static_cast<std::size_t>(slot)].push_back(p);
      }
    }
    std::vector<Index> created;
    for (int slot = 0; slot < nchild; ++slot) {
      if (buckets[static_cast<std::size_t>(slot)].empty()) continue;
      const Box& parent = tree.boxes_[static_cast<std::size_t>(it.id)];
      Box child;
      child.side = parent.side * 0.5;
      child.dim = points.dim;
      child.center = parent.center;
      for (int k = 0; k < points.dim; ++k)
        child.center[k] += (slot & (1 << k)) ? parent.side * 0.25 : -parent.side * 0.25;
      child.parent = it.id;
      child.dof_ids = std::move(buckets[static_cast<std::size_t>(slot)]);
      const Index cid = static_cast<Index>(tree.boxes_.size());
      tree.boxes_.push_back(std::move(child));
      depth_of.push_back(it.depth + 1);
      created.push_back(cid);
    }
    tree.boxes_[static_cast<std::size_t>(it.id)].children = created;
    // Push in reverse so children pop in ascending slot order.
    for (auto c = created.rbegin(); c != created.rend(); ++c)
      stack.push_back({*c, it.depth + 1});
  }

  tree.num_levels_ = max_depth + 1;
  tree.levels_.assign(static_cast<std::size_t>(tree.num_levels_), {});
  for (std::size_t i = 0; i < tree.boxes_.size(); ++i) {
    const int level = tree.num_levels_ - depth_of[i];
    tree.boxes_[i].level = level;
    tree.levels_[static_cast<std::size_t>(level - 1)].push_back(static_cast<Index>(i));
  }
  for (auto& lvl : tree.levels_) std::sort(lvl.begin(), lvl.end());
  return tree;
}

const Box& Tree::box(Index id) const {
  require(id >= 0 && id < num_boxes(), "tree: invalid box id");
  return boxes_[static_cast<std::size_t>(id)];
}

const std::vector<Index>& Tree::level_boxes(int level) const {
  require(level >= 1 && level <= num_levels_, "tree: invalid level");
  return levels_[static_cast<std::size_t>(level - 1)];
}

std::vector<Index> Tree::boxes_near(const Eigen::Vector3d& center, double halfwidth,
                                    int level) const {
  std::vector<Index> out;
  std::vector<Index> stack{root_};
  while (!stack.empty()) {
    const Index id = stack.back();
    stack.pop_back();
    const Box& b = boxes_[static_cast<std::size_t>(id)];
    const double reach = halfwidth + 0.5 * b.side + kRelTol * b.side;
    bool overlap = true;
    for (int k = 0; k < dim() && overlap; ++k)
      overlap = std::abs(b.center[k] - center[k]) <= reach;
    if (!overlap) continue;
    if (b.level == level || (b.is_leaf() && b.level > level)) {
      out.push_back(id);
      continue;
    }
    if (b.level <= level) continue;  // below the working level
    for (auto c = b.children.rbegin(); c != b.children.rend(); ++c) stack.push_back(*c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Index> Tree::box_neighbors(Index id) const {
  const Box& q = box(id);
  std::vector<Index> out;
  for (Index cand : boxes_near(q.center, 0.5 * q.side, q.level)) {
    if (cand == id) continue;
    const Box& b = boxes_[static_cast<std::size_t>(cand)];
    if (b.level != q.level) continue;
    const double tol = kRelTol * std::max(q.side, b.side);
    if (inf_dist(b.center, q.center, dim()) <= 0.5 * (q.side + b.side) + tol)
      out.push_back(cand);
  }
  return out;
}

Index Tree::owner_box(Index point_id, int level) const {
  require(point_id >= 0 && point_id < num_points(), "tree: invalid point id");
  Index id = leaf_of_point_[static_cast<std::size_t>(point_id)];
  while (boxes_[static_cast<std::size_t>(id)].level < level)
    id = boxes_[static_cast<std::size_t>(id)].parent;
  return id;
}

ActiveState ActiveState::make(const Tree& tree) {
  ActiveState st;
  st.active.assign(static_cast<std::size_t>(tree.num_points()), 1);
  st.num_active = tree.num_points();
  st.skeleton_of.assign(static_cast<std::size_t>(tree.num_boxes()), {});
  st.redundant_of.assign(static_cast<std::size_t>(tree.num_boxes()), {});
  return st;
}

void ActiveState::deactivate(const IdList& dofs) {
  for (Index d : dofs) {
    require(active[static_cast<std::size_t>(d)] != 0, "active state: DOF already inactive");
    active[static_cast<std::size_t>(d)] = 0;
  }
  num_active -= static_cast<Index>(dofs.size());
}

DofPartition active_dof_sets(const Tree& tree, const ActiveState& state, Index box_id,
                             bool extend_annulus_to_far) {
  const Box& b = tree.box(box_id);
  const PointSet& pts = tree.points();
  DofPartition part;
  for (Index d : b.dof_ids)
    if (state.is_active(d)) part.box.push_back(d);

  const double tol = kRelTol * b.side;
  const double near_r = 1.5 * b.side + tol;
  const double annulus_r = 2.5 * b.side + tol;

  double reach = annulus_r;
  if (extend_annulus_to_far) reach = 2.0 * tree.box(tree.root()).side;

  for (Index cid : tree.boxes_near(b.center, reach, b.level)) {
    if (cid == box_id) continue;
    const Box& cand = tree.box(cid);
    for (Index d : cand.dof_ids) {
      if (!state.is_active(d)) continue;
      const double dist = inf_dist(pts.point(d), b.center, tree.dim());
      if (dist <= near_r) {
        part.near.push_back(d);
        part.near_owner.push_back(cid);
      } else if (extend_annulus_to_far || dist <= annulus_r) {
        part.annulus.push_back(d);
        part.annulus_owner.push_back(cid);
      }
    }
  }
  sort_by_dof(part.near, part.near_owner);
  sort_by_dof(part.annulus, part.annulus_owner);
  return part;
}

IdList far_beyond_annulus(const Tree& tree, const ActiveState& state, Index box_id) {
  const Box& b = tree.box(box_id);
  const double annulus_r = 2.5 * b.side + kRelTol * b.side;
  IdList out;
  for (Index d = 0; d < tree.num_points(); ++d) {
    if (!state.is_active(d)) continue;
    if (inf_dist(tree.points().point(d), b.center, tree.dim()) > annulus_r)
      out.push_back(d);
  }
  return out;
}

PointSet proxy_points(const Box& box, Index n_p, double radius_factor, std::uint64_t seed) {
  require(n_p >= 1, "proxy_points: n_p must be positive");
  require(box.dim == 2 || box.dim == 3, "proxy_points: box has no dimension");
  PointSet ps;
  ps.dim = box.dim;
  ps.coords.setZero(3, n_p);
  const double radius = radius_factor * box.side;
  if (box.dim == 2) {
    for (Index k = 0; k < n_p; ++k) {
      const double theta = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n_p);
      ps.coords(0, k) = box.center[0] + radius * std::cos(theta);
      ps.coords(1, k) = box.center[1] + radius * std::sin(theta);
    }
    return ps;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index k = 0; k < n_p; ++k) {
    Eigen::Vector3d dir;
    do {
      dir = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
    } while (dir.norm() < 1e-12);
    ps.coords.col(k) = box.center + radius * dir.normalized();
  }
  return ps;
}

}  // namespace skelfac
