#include "skelfac/matrixsource.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace skelfac {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRelTol = 1e-9;

std::uint64_t pair_key(Index i, Index j) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
         static_cast<std::uint64_t>(static_cast<std::uint32_t>(j));
}

double inf_dist(const Eigen::Vector3d& a, const Eigen::Vector3d& b, int dim) {
  double d = 0.0;
  for (int k = 0; k < dim; ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

}  // namespace

MatrixSource::MatrixSource(KernelSpec spec, PointSet points, Vector diagonal)
    : spec_(std::move(spec)), points_(std::move(points)), diagonal_(std::move(diagonal)) {
  require(diagonal_.size() == points_.size(),
          "matrix source: diagonal length must match point count");
  require(spec_.dim == points_.dim, "matrix source: kernel/point dimension mismatch");
  if (spec_.kind == KernelKind::Laplace3dDlp) {
    require(spec_.normals.cols() == points_.size() && spec_.areas.size() == points_.size(),
            "matrix source: double-layer kernel needs per-DOF normals and areas");
  }
}

void MatrixSource::set_override(Index i, Index j, double value) {
  require(i != j, "override: diagonal entries are set via the diagonal rule");
  overrides_[pair_key(i, j)] = value;
}

double MatrixSource::base_entry(Index i, Index j) const {
  if (i == j) return diagonal_[i];
  if (!overrides_.empty()) {
    auto it = overrides_.find(pair_key(i, j));
    if (it != overrides_.end()) return it->second;
  }
  const Eigen::Vector3d z = points_.point(i) - points_.point(j);
  const double r = z.norm();
  switch (spec_.kind) {
    case KernelKind::Laplace2dLog:
      require(r > 0.0, "kernel: coincident distinct points");
      return spec_.weight * (-1.0 / (2.0 * kPi)) * std::log(r);
    case KernelKind::Laplace3d:
      require(r > 0.0, "kernel: coincident distinct points");
      return spec_.weight * 1.0 / (4.0 * kPi * r);
    case KernelKind::Laplace3dDlp: {
      require(r > 0.0, "kernel: coincident distinct points");
      const double num = z.dot(spec_.normals.col(j));
      return num / (4.0 * kPi * r * r * r) * spec_.areas[j];
    }
    case KernelKind::GaussianTest: {
      const double s2 = spec_.sigma * spec_.sigma;
      return std::exp(-0.5 * r * r / s2);
    }
  }
  return 0.0;
}

Matrix MatrixSource::base_entries(const IdList& rows, const IdList& cols) const {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < rows.size(); ++i)
      out(static_cast<Index>(i), static_cast<Index>(j)) = base_entry(rows[i], cols[j]);
  return out;
}

void MatrixSource::check_active(const IdList& ids) const {
  if (!bound_state_) return;
  for (Index d : ids)
    require(bound_state_->is_active(d), "matrix source: inactive DOF requested");
}

Matrix MatrixSource::entries(const IdList& rows, const IdList& cols) const {
  check_active(rows);
  check_active(cols);
  Matrix out = base_entries(rows, cols);
  if (cache_.empty()) return out;

  std::unordered_map<Index, Index> rpos, cpos;
  rpos.reserve(rows.size());
  cpos.reserve(cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rpos[rows[i]] = static_cast<Index>(i);
  for (std::size_t j = 0; j < cols.size(); ++j) cpos[cols[j]] = static_cast<Index>(j);

  std::vector<std::pair<Index, Index>> rhit, chit;  // (block pos, output pos)
  for (const UpdateBlock& blk : cache_) {
    rhit.clear();
    for (std::size_t i = 0; i < blk.rows.size(); ++i) {
      auto it = rpos.find(blk.rows[i]);
      if (it != rpos.end()) rhit.emplace_back(static_cast<Index>(i), it->second);
    }
    if (rhit.empty()) continue;
    chit.clear();
    for (std::size_t j = 0; j < blk.cols.size(); ++j) {
      auto it = cpos.find(blk.cols[j]);
      if (it != cpos.end()) chit.emplace_back(static_cast<Index>(j), it->second);
    }
    if (chit.empty()) continue;
    for (const auto& [bj, oj] : chit)
      for (const auto& [bi, oi] : rhit) out(oi, oj) += blk.values(bi, bj);
  }
  return out;
}

// The proxy blocks carry the same source weighting as real matrix entries
// so the stacked compression matrix is consistently scaled; only the
// proxy-surface quadrature weights (a uniform row scale) are dropped.
Matrix MatrixSource::proxy_block_outgoing(const IdList& dofs, const PointSet& proxy) const {
  Matrix out(proxy.size(), static_cast<Index>(dofs.size()));
  for (std::size_t j = 0; j < dofs.size(); ++j) {
    const Eigen::Vector3d x = points_.point(dofs[j]);
    for (Index g = 0; g < proxy.size(); ++g) {
      const Eigen::Vector3d z = proxy.point(g) - x;
      const double r = z.norm();
      double v = 0.0;
      switch (spec_.kind) {
        case KernelKind::Laplace2dLog:
          v = spec_.weight * (-1.0 / (2.0 * kPi)) * std::log(r);
          break;
        case KernelKind::Laplace3d:
          v = spec_.weight * 1.0 / (4.0 * kPi * r);
          break;
        case KernelKind::Laplace3dDlp:
          v = z.dot(spec_.normals.col(dofs[j])) / (4.0 * kPi * r * r * r) *
              spec_.areas[dofs[j]];
          break;
        case KernelKind::GaussianTest:
          v = std::exp(-0.5 * r * r / (spec_.sigma * spec_.sigma));
          break;
      }
      out(g, static_cast<Index>(j)) = v;
    }
  }
  return out;
}

Matrix MatrixSource::proxy_block_incoming(const IdList& dofs, const PointSet& proxy) const {
  // Monopole sources on the proxy sphere span incoming fields; their
  // fictitious quadrature weight is the mean panel weight so the rows sit
  // at the scale of real matrix rows.
  double source_weight = spec_.weight;
  if (spec_.kind == KernelKind::Laplace3dDlp)
    source_weight = spec_.areas.mean();
  Matrix out(proxy.size(), static_cast<Index>(dofs.size()));
  for (std::size_t j = 0; j < dofs.size(); ++j) {
    const Eigen::Vector3d x = points_.point(dofs[j]);
    for (Index g = 0; g < proxy.size(); ++g) {
      const double r = (x - proxy.point(g)).norm();
      double v = 0.0;
      switch (spec_.kind) {
        case KernelKind::Laplace2dLog:
          v = source_weight * (-1.0 / (2.0 * kPi)) * std::log(r);
          break;
        case KernelKind::Laplace3d:
        case KernelKind::Laplace3dDlp:
          v = source_weight * 1.0 / (4.0 * kPi * r);
          break;
        case KernelKind::GaussianTest:
          v = std::exp(-0.5 * r * r / (spec_.sigma * spec_.sigma));
          break;
      }
      out(g, static_cast<Index>(j)) = v;
    }
  }
  return out;
}

void MatrixSource::add_update(const Tree& tree, Index creator_box, Index row_box,
                              Index col_box, IdList rows, IdList cols, Matrix values) {
  require(values.rows() == static_cast<Index>(rows.size()) &&
              values.cols() == static_cast<Index>(cols.size()),
          "add_update: dimension mismatch");
  if (values.size() == 0 || values.lpNorm<Eigen::Infinity>() == 0.0) return;
  check_active(rows);
  check_active(cols);

  // Every touched point must lie in the creator's 3x3 stencil; corrections
  // further out would contaminate far fields protected by the proxy
  // separation argument.
  const Box& creator = tree.box(creator_box);
  const double reach = 1.5 * creator.side + kRelTol * creator.side;
  for (Index d : rows)
    require(inf_dist(points_.point(d), creator.center, points_.dim) <= reach,
            "add_update: row DOF outside the creating box's near-field stencil");
  for (Index d : cols)
    require(inf_dist(points_.point(d), creator.center, points_.dim) <= reach,
            "add_update: column DOF outside the creating box's near-field stencil");

  UpdateBlock blk;
  blk.row_box = row_box;
  blk.col_box = col_box;
  blk.level = creator.level;
  blk.rows = std::move(rows);
  blk.cols = std::move(cols);
  blk.values = std::move(values);
  cache_.push_back(std::move(blk));
}

void MatrixSource::promote_level(const Tree& tree, const ActiveState& state,
                                 int finished_level) {
  const int new_level = finished_level + 1;

  // Restrict to surviving DOFs and re-key to owners at the next level.
  std::vector<UpdateBlock> kept;
  kept.reserve(cache_.size());
  for (UpdateBlock& blk : cache_) {
    std::vector<Index> rkeep, ckeep;
    for (std::size_t i = 0; i < blk.rows.size(); ++i)
      if (state.is_active(blk.rows[i])) rkeep.push_back(static_cast<Index>(i));
    if (rkeep.empty()) continue;
    for (std::size_t j = 0; j < blk.cols.size(); ++j)
      if (state.is_active(blk.cols[j])) ckeep.push_back(static_cast<Index>(j));
    if (ckeep.empty()) continue;

    UpdateBlock nb;
    nb.level = new_level;
    nb.rows.reserve(rkeep.size());
    nb.cols.reserve(ckeep.size());
    for (Index i : rkeep) nb.rows.push_back(blk.rows[static_cast<std::size_t>(i)]);
    for (Index j : ckeep) nb.cols.push_back(blk.cols[static_cast<std::size_t>(j)]);
    nb.values.resize(static_cast<Index>(rkeep.size()), static_cast<Index>(ckeep.size()));
    for (std::size_t j = 0; j < ckeep.size(); ++j)
      for (std::size_t i = 0; i < rkeep.size(); ++i)
        nb.values(static_cast<Index>(i), static_cast<Index>(j)) =
            blk.values(rkeep[i], ckeep[j]);

    auto promote_key = [&](Index box_id) {
      const Box& b = tree.box(box_id);
      require(b.level >= finished_level, "promote_level: stale cache key");
      return b.level == finished_level ? b.parent : box_id;
    };
    nb.row_box = promote_key(blk.row_box);
    nb.col_box = promote_key(blk.col_box);
    kept.push_back(std::move(nb));
  }

  // Merge blocks sharing a key pair (insertion order keeps this
  // deterministic).
  std::map<std::pair<Index, Index>, std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < kept.size(); ++k)
    groups[{kept[k].row_box, kept[k].col_box}].push_back(k);

  std::vector<UpdateBlock> merged;
  merged.reserve(groups.size());
  for (auto& [key, members] : groups) {
    if (members.size() == 1) {
      merged.push_back(std::move(kept[members[0]]));
    } else {
      std::set<Index> rset, cset;
      for (std::size_t k : members) {
        rset.insert(kept[k].rows.begin(), kept[k].rows.end());
        cset.insert(kept[k].cols.begin(), kept[k].cols.end());
      }
      UpdateBlock nb;
      nb.row_box = key.first;
      nb.col_box = key.second;
      nb.level = new_level;
      nb.rows.assign(rset.begin(), rset.end());
      nb.cols.assign(cset.begin(), cset.end());
      std::unordered_map<Index, Index> rpos, cpos;
      for (std::size_t i = 0; i < nb.rows.size(); ++i) rpos[nb.rows[i]] = static_cast<Index>(i);
      for (std::size_t j = 0; j < nb.cols.size(); ++j) cpos[nb.cols[j]] = static_cast<Index>(j);
      nb.values.setZero(static_cast<Index>(nb.rows.size()), static_cast<Index>(nb.cols.size()));
      for (std::size_t k : members) {
        const UpdateBlock& m = kept[k];
        for (std::size_t j = 0; j < m.cols.size(); ++j)
          for (std::size_t i = 0; i < m.rows.size(); ++i)
            nb.values(rpos[m.rows[i]], cpos[m.cols[j]]) +=
                m.values(static_cast<Index>(i), static_cast<Index>(j));
      }
      merged.push_back(std::move(nb));
    }
  }
  cache_ = std::move(merged);

  // Adjacency at the new level: every cached point must lie within the
  // opposite key box's near-field stencil.
  for (const UpdateBlock& blk : cache_) {
    const Box& rb = tree.box(blk.row_box);
    const Box& cb = tree.box(blk.col_box);
    const double r_reach = 1.5 * rb.side + kRelTol * rb.side;
    const double c_reach = 1.5 * cb.side + kRelTol * cb.side;
    for (Index d : blk.rows)
      require(inf_dist(points_.point(d), cb.center, points_.dim) <= c_reach,
              "promote_level: cached pair not adjacent at the new level");
    for (Index d : blk.cols)
      require(inf_dist(points_.point(d), rb.center, points_.dim) <= r_reach,
              "promote_level: cached pair not adjacent at the new level");
  }
}

bool MatrixSource::cache_respects_far_field(const Tree& tree, const ActiveState& state,
                                            Index box_id) const {
  const Box& b = tree.box(box_id);
  const double annulus_r = 2.5 * b.side + kRelTol * b.side;
  std::set<Index> in_box;
  for (Index d : b.dof_ids)
    if (state.is_active(d)) in_box.insert(d);

  auto beyond = [&](Index d) {
    return inf_dist(points_.point(d), b.center, points_.dim) > annulus_r;
  };
  for (const UpdateBlock& blk : cache_) {
    bool rows_in_box = false, rows_beyond = false;
    for (Index d : blk.rows) {
      if (in_box.count(d)) rows_in_box = true;
      if (state.is_active(d) && beyond(d)) rows_beyond = true;
    }
    bool cols_in_box = false, cols_beyond = false;
    for (Index d : blk.cols) {
      if (in_box.count(d)) cols_in_box = true;
      if (state.is_active(d) && beyond(d)) cols_beyond = true;
    }
    if ((rows_in_box && cols_beyond) || (rows_beyond && cols_in_box)) return false;
  }
  return true;
}

bool MatrixSource::far_field_unmodified(const Tree& tree, const ActiveState& state,
                                        int level) const {
  if (level > tree.num_levels()) return true;
  for (Index box_id : tree.level_boxes(level)) {
    const Box& b = tree.box(box_id);
    const double near_r = 1.5 * b.side + kRelTol * b.side;
    std::set<Index> in_box;
    for (Index d : b.dof_ids)
      if (state.is_active(d)) in_box.insert(d);
    auto far = [&](Index d) {
      return !in_box.count(d) &&
             inf_dist(points_.point(d), b.center, points_.dim) > near_r;
    };
    for (const UpdateBlock& blk : cache_) {
      bool rows_in = false, rows_far = false, cols_in = false, cols_far = false;
      for (Index d : blk.rows) {
        if (!state.is_active(d)) continue;
        if (in_box.count(d)) rows_in = true;
        if (far(d)) rows_far = true;
      }
      for (Index d : blk.cols) {
        if (!state.is_active(d)) continue;
        if (in_box.count(d)) cols_in = true;
        if (far(d)) cols_far = true;
      }
      if ((rows_in && cols_far) || (rows_far && cols_in)) return false;
    }
  }
  return true;
}

std::size_t MatrixSource::cache_bytes() const {
  std::size_t total = 0;
  for (const UpdateBlock& blk : cache_)
    total += sizeof(double) * static_cast<std::size_t>(blk.values.size());
  return total;
}

}  // namespace skelfac
