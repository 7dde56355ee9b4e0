#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "skelfac/dense.hpp"
#include "skelfac/geometry.hpp"

namespace skelfac {

enum class KernelKind { Laplace2dLog, Laplace3d, Laplace3dDlp, GaussianTest };

/// Kernel plus discretization scaling.  Double-layer kernels carry
/// per-point unit normals and panel areas; the other kernels use a single
/// uniform off-diagonal weight.
struct KernelSpec {
  int dim = 2;
  KernelKind kind = KernelKind::Laplace2dLog;
  double weight = 1.0;
  double sigma = 1.0;           // gaussian width
  Eigen::Matrix3Xd normals;     // per-DOF, double layer only
  Vector areas;                 // per-DOF, double layer only

  bool symmetric() const { return kind != KernelKind::Laplace3dDlp; }
};

/// One additive correction registered by a skeletonization step, together
/// with the owner-box pair it connects at its creation level.
struct UpdateBlock {
  Index row_box = -1;
  Index col_box = -1;
  int level = 0;
  IdList rows;
  IdList cols;
  Matrix values;
};

/// On-demand matrix entries: kernel interactions plus the accumulated
/// Schur-complement corrections from earlier skeletonization steps.
///
/// entries() is read-only and deterministic (corrections accumulate in a
/// fixed order); add_update/promote_level require exclusive access.
class MatrixSource {
 public:
  MatrixSource(KernelSpec spec, PointSet points, Vector diagonal);

  Index size() const { return points_.size(); }
  int dim() const { return points_.dim; }
  const PointSet& points() const { return points_; }
  const KernelSpec& spec() const { return spec_; }
  bool symmetric() const { return spec_.symmetric(); }

  /// Fixed near-field entry replacing the plain kernel value (quadrature
  /// corrections of a discretization, not Schur updates).
  void set_override(Index i, Index j, double value);

  /// Kernel/diagonal/override value, without Schur corrections.
  double base_entry(Index i, Index j) const;
  Matrix base_entries(const IdList& rows, const IdList& cols) const;

  /// Current matrix block: base entries plus every cached correction that
  /// overlaps (rows, cols).
  Matrix entries(const IdList& rows, const IdList& cols) const;

  /// Raw kernel evaluations between proxy points (as targets) and the
  /// given DOFs (as sources); spans outgoing far fields of the DOFs.
  Matrix proxy_block_outgoing(const IdList& dofs, const PointSet& proxy) const;

  /// Raw kernel evaluations between the DOFs (as targets) and monopole
  /// sources at proxy points; spans incoming far fields.  Needed only for
  /// unsymmetric kernels.
  Matrix proxy_block_incoming(const IdList& dofs, const PointSet& proxy) const;

  /// Register a Schur correction created while skeletonizing
  /// `creator_box`.  Every touched point must lie inside the creator's
  /// 3x3 stencil; this is the executable form of the far-field
  /// preservation guarantee and violations throw.
  void add_update(const Tree& tree, Index creator_box, Index row_box, Index col_box,
                  IdList rows, IdList cols, Matrix values);

  /// After all boxes of `finished_level` are skeletonized: restrict cached
  /// blocks to active DOFs, re-key them to owner boxes at the next level,
  /// merge blocks sharing a key pair, and check that every surviving pair
  /// is adjacent at the new level (throws otherwise).
  void promote_level(const Tree& tree, const ActiveState& state, int finished_level);

  /// Optional active-DOF validation for entries(); pass nullptr to unbind.
  void bind_active(const ActiveState* state) { bound_state_ = state; }

  /// Test-mode scan: no cached block may couple the box's DOFs with
  /// active DOFs beyond its proxy annulus.
  bool cache_respects_far_field(const Tree& tree, const ActiveState& state,
                                Index box_id) const;

  /// Test-mode scan after promotion: for every box at `level`, no cached
  /// block couples the box's active DOFs with its active far field.
  bool far_field_unmodified(const Tree& tree, const ActiveState& state, int level) const;

  const std::vector<UpdateBlock>& cache() const { return cache_; }
  std::size_t cache_bytes() const;

 private:
  void check_active(const IdList& ids) const;

  KernelSpec spec_;
  PointSet points_;
  Vector diagonal_;
  std::unordered_map<std::uint64_t, double> overrides_;
  std::vector<UpdateBlock> cache_;
  const ActiveState* bound_state_ = nullptr;
};

}  // namespace skelfac
