#pragma once

#include <cstdint>

#include "skelfac/matrixsource.hpp"

namespace skelfac {

struct SkelOptions {
  double eps = 1e-6;
  Index n_proxy = 64;
  double proxy_radius = 2.5;
  bool use_proxy = true;
  bool spd = false;
  std::uint64_t proxy_seed = 0x5ca1ab1eULL;
};

/// Stored operators of one skeletonization step.
///
/// The step conjugates the matrix by block unit-triangular operators
///   V^{-1} A W^{-1}
/// that decouple the redundant DOFs R of a box from everything else.
/// Both operators are kept in factored form: the interpolation shear
/// (matrix `interp`) and the pivot-elimination shears (`eu`, `el`).
/// For a strong step the coupled set J is skeleton + near field; for a
/// weak step J is the skeleton alone.  In spd mode `el` is not stored
/// (el = eu^T), which makes V = W^* exact.
struct SkelFactor {
  enum class Kind : std::uint8_t { Strong = 0, Weak = 1 };

  Kind kind = Kind::Strong;
  Index box_id = -1;
  int level = 0;
  bool spd = false;
  IdList redundant;  // R, pivot order
  IdList skeleton;   // S, pivot order
  IdList nearf;      // near-field ids (strong only)
  Matrix interp;     // |S| x |R|
  Matrix eu;         // |R| x |J|,  -X_RR^{-1} X_RJ
  Matrix el;         // |J| x |R|,  -X_JR X_RR^{-1}; empty when spd
  PivotFactor pivot;  // factored X_RR

  bool trivial() const { return redundant.empty(); }
  Index j_size() const { return static_cast<Index>(skeleton.size() + nearf.size()); }
  std::size_t bytes() const;

  // In-place actions on global coordinate vectors.
  void apply_w(Vector& x) const;
  void apply_w_inv(Vector& x) const;
  void apply_w_adj(Vector& x) const;
  void apply_w_inv_adj(Vector& x) const;
  void apply_v(Vector& x) const;
  void apply_v_inv(Vector& x) const;
  void apply_v_adj(Vector& x) const;
  void apply_v_inv_adj(Vector& x) const;
};

/// One strong skeletonization step: compress the box's far field through
/// the annulus and proxy surface, decouple the redundant DOFs from the
/// skeleton and near field, push Schur corrections into the cache and mark
/// the redundant DOFs inactive.  Returns a trivial factor when there is
/// nothing to do (empty box or empty far field).
SkelFactor strong_skeletonize(MatrixSource& src, const Tree& tree, ActiveState& state,
                              Index box_id, const SkelOptions& opts);

/// One weak skeletonization step: compress near plus far field at once;
/// the redundant DOFs then decouple against the skeleton alone and no
/// correction leaves the box.
SkelFactor weak_skeletonize(MatrixSource& src, const Tree& tree, ActiveState& state,
                            Index box_id, const SkelOptions& opts);

}  // namespace skelfac
