#include "skelfac/skeletonization.hpp"

#include <algorithm>
#include <map>
#include <utility>

namespace skelfac {

namespace {

// x[tgt] += M * x[src]
template <class Expr>
void shear(Vector& x, const IdList& tgt, const IdList& src, const Expr& m) {
  if (tgt.empty() || src.empty()) return;
  Vector tmp = gather(x, src);
  Vector upd = m * tmp;
  scatter_add(x, tgt, upd);
}

IdList concat(const IdList& a, const IdList& b) {
  IdList out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

std::size_t SkelFactor::bytes() const {
  return sizeof(double) *
             (static_cast<std::size_t>(interp.size()) + static_cast<std::size_t>(eu.size()) +
              static_cast<std::size_t>(el.size())) +
         pivot.bytes();
}

// W   = L_T^{-1} then U^{-1}:        x_S += T x_R;   x_R -= EU x_J
// V   = L^{-1}  then U_T^{-1}:       x_J -= EL x_R;  x_R += T^* x_S
// with J = [S N], EL = EU^T in spd mode, and inverses/adjoints obtained by
// reversing the shear order and negating/transposing the blocks.
void SkelFactor::apply_w(Vector& x) const {
  const IdList j = concat(skeleton, nearf);
  shear(x, skeleton, redundant, interp);
  shear(x, redundant, j, -eu);
}

void SkelFactor::apply_w_inv(Vector& x) const {
  const IdList j = concat(skeleton, nearf);
  shear(x, redundant, j, eu);
  shear(x, skeleton, redundant, -interp);
}

void SkelFactor::apply_v(Vector& x) const {
  const IdList j = concat(skeleton, nearf);
  if (spd)
    shear(x, j, redundant, -eu.transpose());
  else
    shear(x, j, redundant, -el);
  shear(x, redundant, skeleton, interp.transpose());
}

void SkelFactor::apply_v_inv(Vector& x) const {
  const IdList j = concat(skeleton, nearf);
  shear(x, redundant, skeleton, -interp.transpose());
  if (spd)
    shear(x, j, redundant, eu.transpose());
  else
    shear(x, j, redundant, el);
}

void SkelFactor::apply_v_adj(Vector& x) const {
  const IdList j = concat(skeleton, nearf);
  shear(x, skeleton, redundant, interp);
  if (spd)
    shear(x, redundant, j, -eu);
  else
    shear(x, redundant, j, -el.transpose());
}

void SkelFactor::apply_v_inv_adj(Vector& x) const {
  const IdList j = concat(skeleton, nearf);
  if (spd)
    shear(x, redundant, j, eu);
  else
    shear(x, redundant, j, el.transpose());
  shear(x, skeleton, redundant, -interp);
}

void SkelFactor::apply_w_adj(Vector& x) const {
  const IdList j = concat(skeleton, nearf);
  shear(x, j, redundant, -eu.transpose());
  shear(x, redundant, skeleton, interp.transpose());
}

void SkelFactor::apply_w_inv_adj(Vector& x) const {
  const IdList j = concat(skeleton, nearf);
  shear(x, redundant, skeleton, -interp.transpose());
  shear(x, j, redundant, eu.transpose());
}

namespace {

struct StackedId {
  IdList skeleton_ids;  // global
  IdList redundant_ids;
  Matrix interp;
};

// ID of the stacked compression block over the columns B.
StackedId compress_box(MatrixSource& src, const DofPartition& part, const Box& box,
                       bool include_near_rows, bool proxy_rows,
                       const SkelOptions& opts) {
  const IdList& b = part.box;
  std::vector<Matrix> rows;
  if (include_near_rows) {
    rows.push_back(src.entries(part.near, b));
    if (!src.symmetric()) rows.push_back(src.entries(b, part.near).transpose());
  }
  rows.push_back(src.entries(part.annulus, b));
  if (!src.symmetric()) rows.push_back(src.entries(b, part.annulus).transpose());
  if (proxy_rows) {
    const PointSet gamma =
        proxy_points(box, opts.n_proxy, opts.proxy_radius, opts.proxy_seed);
    rows.push_back(src.proxy_block_outgoing(b, gamma));
    if (!src.symmetric()) rows.push_back(src.proxy_block_incoming(b, gamma));
  }

  Index total = 0;
  for (const Matrix& m : rows) total += m.rows();
  Matrix stack(total, static_cast<Index>(b.size()));
  Index at = 0;
  for (const Matrix& m : rows) {
    stack.middleRows(at, m.rows()) = m;
    at += m.rows();
  }

  const IdResult id = interp_decomp(stack, opts.eps);
  StackedId out;
  out.skeleton_ids.reserve(id.skeleton.size());
  out.redundant_ids.reserve(id.redundant.size());
  for (Index p : id.skeleton) out.skeleton_ids.push_back(b[static_cast<std::size_t>(p)]);
  for (Index p : id.redundant) out.redundant_ids.push_back(b[static_cast<std::size_t>(p)]);
  out.interp = id.interp;
  return out;
}

// Schur corrections split by owner-box pairs and registered in the cache.
void push_corrections(MatrixSource& src, const Tree& tree, Index box_id,
                      const Matrix& delta, const IdList& j_ids, const IdList& j_owner) {
  std::map<Index, std::vector<Index>> by_owner;  // owner -> positions in J
  for (std::size_t p = 0; p < j_ids.size(); ++p)
    by_owner[j_owner[p]].push_back(static_cast<Index>(p));

  for (const auto& [row_owner, rpos] : by_owner) {
    for (const auto& [col_owner, cpos] : by_owner) {
      Matrix sub(static_cast<Index>(rpos.size()), static_cast<Index>(cpos.size()));
      IdList rids(rpos.size()), cids(cpos.size());
      for (std::size_t i = 0; i < rpos.size(); ++i)
        rids[i] = j_ids[static_cast<std::size_t>(rpos[i])];
      for (std::size_t j = 0; j < cpos.size(); ++j)
        cids[j] = j_ids[static_cast<std::size_t>(cpos[j])];
      for (std::size_t j = 0; j < cpos.size(); ++j)
        for (std::size_t i = 0; i < rpos.size(); ++i)
          sub(static_cast<Index>(i), static_cast<Index>(j)) = delta(rpos[i], cpos[j]);
      src.add_update(tree, box_id, row_owner, col_owner, std::move(rids), std::move(cids),
                     std::move(sub));
    }
  }
}

SkelFactor make_trivial(SkelFactor::Kind kind, Index box_id, int level, bool spd) {
  SkelFactor f;
  f.kind = kind;
  f.box_id = box_id;
  f.level = level;
  f.spd = spd;
  return f;
}

}  // namespace

SkelFactor strong_skeletonize(MatrixSource& src, const Tree& tree, ActiveState& state,
                              Index box_id, const SkelOptions& opts) {
  const Box& box = tree.box(box_id);
  DofPartition part = active_dof_sets(tree, state, box_id, !opts.use_proxy);
  auto& skel_rec = state.skeleton_of[static_cast<std::size_t>(box_id)];
  auto& red_rec = state.redundant_of[static_cast<std::size_t>(box_id)];

  if (part.box.empty()) return make_trivial(SkelFactor::Kind::Strong, box_id, box.level, opts.spd);

  const Index far_rest = state.num_active - static_cast<Index>(part.box.size()) -
                         static_cast<Index>(part.near.size()) -
                         static_cast<Index>(part.annulus.size());
  const bool proxy_rows = opts.use_proxy && far_rest > 0;
  if (part.annulus.empty() && far_rest == 0) {
    // Empty far field: nothing is compressible, all DOFs stay as skeleton.
    skel_rec = part.box;
    return make_trivial(SkelFactor::Kind::Strong, box_id, box.level, opts.spd);
  }

  StackedId id = compress_box(src, part, box, /*include_near_rows=*/false, proxy_rows, opts);
  if (id.redundant_ids.empty()) {
    skel_rec = id.skeleton_ids;
    return make_trivial(SkelFactor::Kind::Strong, box_id, box.level, opts.spd);
  }

  const Index nr = static_cast<Index>(id.redundant_ids.size());
  const Index ns = static_cast<Index>(id.skeleton_ids.size());
  const Index nn = static_cast<Index>(part.near.size());
  const Index nj = ns + nn;

  // Local dense block over [R S N] in that order.
  IdList local = concat(concat(id.redundant_ids, id.skeleton_ids), part.near);
  Matrix a = src.entries(local, local);
  const auto a_rr = a.block(0, 0, nr, nr);
  const auto a_rj = a.block(0, nr, nr, nj);
  const auto a_jr = a.block(nr, 0, nj, nr);
  const auto a_sr = a.block(nr, 0, ns, nr);
  const auto a_rs = a.block(0, nr, nr, ns);
  const auto a_ss = a.block(nr, nr, ns, ns);
  const auto a_sj = a.block(nr, nr, ns, nj);
  const auto a_js = a.block(nr, nr, nj, ns);
  const Matrix& t = id.interp;

  // Interpolation elimination: only the R rows and columns change.
  Matrix x_rr = a_rr - t.transpose() * a_sr - a_rs * t + t.transpose() * a_ss * t;
  Matrix x_rj = a_rj - t.transpose() * a_sj;
  Matrix x_jr;
  if (opts.spd)
    x_jr = x_rj.transpose();
  else
    x_jr = a_jr - a_js * t;

  SkelFactor f;
  f.kind = SkelFactor::Kind::Strong;
  f.box_id = box_id;
  f.level = box.level;
  f.spd = opts.spd;
  f.redundant = id.redundant_ids;
  f.skeleton = id.skeleton_ids;
  f.nearf = part.near;
  f.interp = t;
  try {
    f.pivot = PivotFactor::factor(x_rr, opts.spd);
  } catch (const Error& e) {
    throw Error("strong skeletonization of box " + std::to_string(box_id) + " at level " +
                std::to_string(box.level) + ": " + e.what());
  }
  f.eu = -f.pivot.solve(x_rj);
  if (!opts.spd) f.el = -(f.pivot.solve_transpose(x_jr.transpose())).transpose();

  // Schur corrections onto skeleton + near field.
  Matrix delta = opts.spd ? Matrix(f.eu.transpose() * x_rj) : Matrix(f.el * x_rj);
  if (opts.spd) delta = 0.5 * (delta + delta.transpose()).eval();
  IdList j_ids = concat(id.skeleton_ids, part.near);
  IdList j_owner(j_ids.size(), box_id);
  for (std::size_t p = 0; p < part.near.size(); ++p)
    j_owner[id.skeleton_ids.size() + p] = part.near_owner[p];
  push_corrections(src, tree, box_id, delta, j_ids, j_owner);

  state.deactivate(f.redundant);
  skel_rec = f.skeleton;
  red_rec = f.redundant;
  return f;
}

SkelFactor weak_skeletonize(MatrixSource& src, const Tree& tree, ActiveState& state,
                            Index box_id, const SkelOptions& opts) {
  const Box& box = tree.box(box_id);
  DofPartition part = active_dof_sets(tree, state, box_id, !opts.use_proxy);
  auto& skel_rec = state.skeleton_of[static_cast<std::size_t>(box_id)];
  auto& red_rec = state.redundant_of[static_cast<std::size_t>(box_id)];

  if (part.box.empty()) return make_trivial(SkelFactor::Kind::Weak, box_id, box.level, opts.spd);

  const Index far_rest = state.num_active - static_cast<Index>(part.box.size()) -
                         static_cast<Index>(part.near.size()) -
                         static_cast<Index>(part.annulus.size());
  const bool proxy_rows = opts.use_proxy && far_rest > 0;

  StackedId id = compress_box(src, part, box, /*include_near_rows=*/true, proxy_rows, opts);
  if (id.redundant_ids.empty()) {
    skel_rec = id.skeleton_ids;
    return make_trivial(SkelFactor::Kind::Weak, box_id, box.level, opts.spd);
  }

  const Index nr = static_cast<Index>(id.redundant_ids.size());
  const Index ns = static_cast<Index>(id.skeleton_ids.size());

  IdList local = concat(id.redundant_ids, id.skeleton_ids);
  Matrix a = src.entries(local, local);
  const auto a_rr = a.block(0, 0, nr, nr);
  const auto a_rs = a.block(0, nr, nr, ns);
  const auto a_sr = a.block(nr, 0, ns, nr);
  const auto a_ss = a.block(nr, nr, ns, ns);
  const Matrix& t = id.interp;

  Matrix x_rr = a_rr - t.transpose() * a_sr - a_rs * t + t.transpose() * a_ss * t;
  Matrix x_rs = a_rs - t.transpose() * a_ss;
  Matrix x_sr;
  if (opts.spd)
    x_sr = x_rs.transpose();
  else
    x_sr = a_sr - a_ss * t;

  SkelFactor f;
  f.kind = SkelFactor::Kind::Weak;
  f.box_id = box_id;
  f.level = box.level;
  f.spd = opts.spd;
  f.redundant = id.redundant_ids;
  f.skeleton = id.skeleton_ids;
  f.interp = t;
  try {
    f.pivot = PivotFactor::factor(x_rr, opts.spd);
  } catch (const Error& e) {
    throw Error("weak skeletonization of box " + std::to_string(box_id) + " at level " +
                std::to_string(box.level) + ": " + e.what());
  }
  f.eu = -f.pivot.solve(x_rs);
  if (!opts.spd) f.el = -(f.pivot.solve_transpose(x_sr.transpose())).transpose();

  if (ns > 0) {
    Matrix delta = opts.spd ? Matrix(f.eu.transpose() * x_rs) : Matrix(f.el * x_rs);
    if (opts.spd) delta = 0.5 * (delta + delta.transpose()).eval();
    IdList j_owner(id.skeleton_ids.size(), box_id);
    push_corrections(src, tree, box_id, delta, id.skeleton_ids, j_owner);
  }

  state.deactivate(f.redundant);
  skel_rec = f.skeleton;
  red_rec = f.redundant;
  return f;
}

}  // namespace skelfac
