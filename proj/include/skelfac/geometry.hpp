#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "skelfac/common.hpp"

namespace skelfac {

/// A set of points in R^2 or R^3.  Points are stored as 3 x N with a zero
/// third coordinate in 2D so distance computations are uniform.
struct PointSet {
  int dim = 0;
  Eigen::Matrix3Xd coords;

  Index size() const { return coords.cols(); }
  Eigen::Vector3d point(Index i) const { return coords.col(i); }
};

PointSet make_point_set(int dim, const Eigen::Matrix3Xd& coords);

/// One cube of the spatial tree.  `level` counts from 1 at the finest
/// level up to the root; leaves of an adaptive tree may sit at any level.
struct Box {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double side = 0.0;
  int dim = 0;
  int level = 0;
  Index parent = -1;
  std::vector<Index> children;
  IdList dof_ids;  // all points in this box's subtree, ascending

  bool is_leaf() const { return children.empty(); }
};

/// Adaptive 2^d tree over a point set.  Box ids are stable; per-level
/// lists give the bottom-up traversal order (every level-l box precedes
/// every level-(l+1) box).  Immutable once built, so concurrent readers
/// are safe.
class Tree {
 public:
  static Tree build(const PointSet& points, Index n_occ);

  int dim() const { return points_.dim; }
  const PointSet& points() const { return points_; }
  Index num_points() const { return points_.size(); }
  Index num_boxes() const { return static_cast<Index>(boxes_.size()); }
  int num_levels() const { return num_levels_; }
  const Box& box(Index id) const;
  Index root() const { return root_; }

  /// Box ids at a given level (1 = finest), in traversal order.
  const std::vector<Index>& level_boxes(int level) const;

  /// Same-level boxes whose closed cubes touch the query box, ascending ids.
  std::vector<Index> box_neighbors(Index id) const;

  /// The box owning a point when the factorization works at `level`:
  /// the ancestor at that level, or the containing leaf if it is coarser.
  Index owner_box(Index point_id, int level) const;

  /// Boxes at `level` (plus coarser leaves) whose cubes intersect the cube
  /// of halfwidth `halfwidth` centered at `center`.
  std::vector<Index> boxes_near(const Eigen::Vector3d& center, double halfwidth,
                                int level) const;

 private:
  PointSet points_;
  int num_levels_ = 0;
  Index root_ = -1;
  std::vector<Box> boxes_;
  std::vector<std::vector<Index>> levels_;  // levels_[l-1]
  std::vector<Index> leaf_of_point_;
};

/// Active/inactive bookkeeping for the factorization: which DOFs are still
/// coupled, and the skeleton/redundant split recorded per box.  Mutated
/// only by the (single-threaded) factorization driver.
struct ActiveState {
  std::vector<std::uint8_t> active;
  Index num_active = 0;
  std::vector<IdList> skeleton_of;
  std::vector<IdList> redundant_of;

  static ActiveState make(const Tree& tree);
  bool is_active(Index dof) const { return active[static_cast<std::size_t>(dof)] != 0; }
  void deactivate(const IdList& dofs);
};

/// Active DOFs split into the box itself, its geometric near field
/// (3x3 stencil) and the in-annulus far field (5x5 stencil minus near).
/// Far-field DOFs beyond the annulus are not enumerated here.
struct DofPartition {
  IdList box;            // B
  IdList near;           // N
  IdList annulus;        // O
  IdList near_owner;     // owner box id for each entry of `near`
  IdList annulus_owner;  // owner box id for each entry of `annulus`
};

/// Classify active DOFs around a box by point distance (infinity norm from
/// the box center; 1.5 and 2.5 box sides).  On uniform trees this matches
/// the box-stencil definition; at refinement boundaries coarser-leaf DOFs
/// are classified by their own positions.  With `extend_annulus_to_far`
/// the annulus absorbs the entire far field (direct compression without a
/// proxy surface).
DofPartition active_dof_sets(const Tree& tree, const ActiveState& state, Index box_id,
                             bool extend_annulus_to_far = false);

/// Active DOFs beyond the 5x5(x5) stencil of a box (test/validation use).
IdList far_beyond_annulus(const Tree& tree, const ActiveState& state, Index box_id);

/// Points on the proxy circle (2D, uniformly spaced) or sphere (3D, seeded
/// pseudo-random) of radius radius_factor * side around the box center.
PointSet proxy_points(const Box& box, Index n_p, double radius_factor = 2.5,
                      std::uint64_t seed = 0x5ca1ab1eULL);

}  // namespace skelfac
