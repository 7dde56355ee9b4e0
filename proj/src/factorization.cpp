#include "skelfac/factorization.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>

namespace skelfac {

namespace {

void check_dim(const Factorization& f, const Vector& x) {
  require(x.size() == f.size(), "factorization: vector length mismatch");
}

}  // namespace

Vector Factorization::apply(const Vector& x) const {
  check_dim(*this, x);
  Vector y = x;
  for (const SkelFactor& f : factors_) f.apply_w(y);
  middle_apply(y, 0);
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) it->apply_v(y);
  return y;
}

Vector Factorization::apply_adjoint(const Vector& x) const {
  check_dim(*this, x);
  Vector y = x;
  for (const SkelFactor& f : factors_) f.apply_v_adj(y);
  middle_apply(y, 2);
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) it->apply_w_adj(y);
  return y;
}

Vector Factorization::solve(const Vector& b) const {
  check_dim(*this, b);
  Vector y = b;
  for (const SkelFactor& f : factors_) f.apply_v_inv(y);
  middle_apply(y, 1);
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) it->apply_w_inv(y);
  return y;
}

Vector Factorization::solve_adjoint(const Vector& b) const {
  check_dim(*this, b);
  Vector y = b;
  for (const SkelFactor& f : factors_) f.apply_w_inv_adj(y);
  middle_apply(y, 3);
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) it->apply_v_inv_adj(y);
  return y;
}

void Factorization::middle_apply(Vector& x, int mode) const {
  auto block = [&](const IdList& ids, const PivotFactor& piv) {
    if (ids.empty()) return;
    Matrix v = gather(x, ids);
    switch (mode) {
      case 0: v = piv.multiply(v); break;
      case 1: v = piv.solve(v); break;
      case 2: v = piv.multiply_adjoint(v); break;
      case 3: v = piv.solve_adjoint(v); break;
      case 4: v = piv.sqrt_multiply(v); break;
      case 5: v = piv.sqrt_multiply_adjoint(v); break;
      case 6: v = piv.sqrt_solve(v); break;
    }
    scatter(x, ids, v);
  };
  for (const SkelFactor& f : factors_) block(f.redundant, f.pivot);
  block(terminal_ids_, terminal_pivot_);
}

Vector Factorization::apply_sqrt(const Vector& x) const {
  require(spd_, "apply_sqrt: factorization was not built in spd mode");
  check_dim(*this, x);
  Vector y = x;
  middle_apply(y, 4);
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) it->apply_v(y);
  return y;
}

Vector Factorization::apply_sqrt_adjoint(const Vector& x) const {
  require(spd_, "apply_sqrt_adjoint: factorization was not built in spd mode");
  check_dim(*this, x);
  Vector y = x;
  for (const SkelFactor& f : factors_) f.apply_v_adj(y);
  middle_apply(y, 5);
  return y;
}

Vector Factorization::solve_sqrt(const Vector& b) const {
  require(spd_, "solve_sqrt: factorization was not built in spd mode");
  check_dim(*this, b);
  Vector y = b;
  for (const SkelFactor& f : factors_) f.apply_v_inv(y);
  middle_apply(y, 6);
  return y;
}

double Factorization::logdet() const {
  require(spd_, "logdet: factorization was not built in spd mode");
  double s = 0.0;
  for (const SkelFactor& f : factors_) s += f.pivot.logdet();
  s += terminal_pivot_.logdet();
  return s;
}

std::size_t Factorization::bytes() const {
  std::size_t total = terminal_pivot_.bytes();
  for (const SkelFactor& f : factors_) total += f.bytes();
  return total;
}

Factorization Factorization::build(MatrixSource& src, const Tree& tree,
                                   const FactorOptions& opts, Method method) {
  require(src.size() == tree.num_points(),
          "factorization: matrix source and tree sizes differ");
  require(opts.eps >= 0.0, "factorization: eps must be nonnegative");

  Factorization fac;
  fac.n_ = src.size();
  fac.dim_ = tree.dim();
  fac.method_ = method;
  fac.spd_ = opts.spd;
  fac.eps_ = opts.eps;

  ActiveState state = ActiveState::make(tree);
  src.bind_active(&state);

  SkelOptions sopt;
  sopt.eps = opts.eps;
  sopt.n_proxy = opts.n_proxy;
  sopt.proxy_radius = opts.proxy_radius;
  sopt.use_proxy = opts.use_proxy;
  sopt.spd = opts.spd;
  sopt.proxy_seed = opts.proxy_seed;

  const int levels = tree.num_levels();
  for (int level = 1; level <= levels - 2; ++level) {
    Index k_level = 0;
    if (method == Method::RsWs) {
      for (Index box_id : tree.level_boxes(level)) {
        SkelFactor f = weak_skeletonize(src, tree, state, box_id, sopt);
        if (!f.trivial()) fac.factors_.push_back(std::move(f));
      }
    }
    for (Index box_id : tree.level_boxes(level)) {
      if (opts.validate)
        require(src.cache_respects_far_field(tree, state, box_id),
                "validation: cached update touches a protected far-field pair");
      const Index active_before = state.num_active;
      SkelFactor f = strong_skeletonize(src, tree, state, box_id, sopt);
      require(active_before - state.num_active ==
                  static_cast<Index>(f.redundant.size()),
              "validation: active count did not shrink by |R|");
      k_level = std::max(
          k_level,
          static_cast<Index>(state.skeleton_of[static_cast<std::size_t>(box_id)].size()));
      if (!f.trivial()) fac.factors_.push_back(std::move(f));
    }
    fac.klevels_.push_back(k_level);
    src.promote_level(tree, state, level);
    if (opts.validate)
      require(src.far_field_unmodified(tree, state, level + 1),
              "validation: far field modified at the start of a level");
  }

  if (method == Method::RsWs && levels >= 2) {
    // Final weak pass: the last level where boxes still have a complement
    // to compress against.
    Index k_level = 0;
    for (Index box_id : tree.level_boxes(levels - 1)) {
      SkelFactor f = weak_skeletonize(src, tree, state, box_id, sopt);
      k_level = std::max(
          k_level,
          static_cast<Index>(state.skeleton_of[static_cast<std::size_t>(box_id)].size()));
      if (!f.trivial()) fac.factors_.push_back(std::move(f));
    }
    fac.klevels_.push_back(k_level);
  }

  for (Index d = 0; d < src.size(); ++d)
    if (state.is_active(d)) fac.terminal_ids_.push_back(d);
  try {
    fac.terminal_pivot_ =
        PivotFactor::factor(src.entries(fac.terminal_ids_, fac.terminal_ids_), opts.spd);
  } catch (const Error& e) {
    throw Error(std::string("terminal block factorization: ") + e.what());
  }

  for (const SkelFactor& f : fac.factors_)
    fac.perm_.insert(fac.perm_.end(), f.redundant.begin(), f.redundant.end());
  fac.perm_.insert(fac.perm_.end(), fac.terminal_ids_.begin(), fac.terminal_ids_.end());
  require(fac.perm_.size() == static_cast<std::size_t>(fac.n_),
          "factorization: middle blocks do not partition the index set");

  src.bind_active(nullptr);
  return fac;
}

Factorization factor_rss(MatrixSource& src, const Tree& tree, const FactorOptions& opts) {
  return Factorization::build(src, tree, opts, Method::RsS);
}

Factorization factor_rsws(MatrixSource& src, const Tree& tree, const FactorOptions& opts) {
  return Factorization::build(src, tree, opts, Method::RsWs);
}

// ---------------------------------------------------------------------------
// Serialization (format documented in README.md).

namespace {

constexpr std::uint32_t kMagic = 0x534b4c46u;  // "SKLF"
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(static_cast<bool>(is), "load: truncated stream");
  return v;
}

void put_ids(std::ostream& os, const IdList& ids) {
  put<std::uint64_t>(os, ids.size());
  for (Index d : ids) put<std::int64_t>(os, d);
}

IdList get_ids(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  IdList ids(n);
  for (auto& d : ids) d = get<std::int64_t>(is);
  return ids;
}

void put_matrix(std::ostream& os, const Matrix& m) {
  put<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
  if (m.size() > 0)
    os.write(reinterpret_cast<const char*>(m.data()),
             static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Matrix get_matrix(std::istream& is) {
  const auto rows = get<std::uint64_t>(is);
  const auto cols = get<std::uint64_t>(is);
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  if (m.size() > 0) {
    is.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    require(static_cast<bool>(is), "load: truncated stream");
  }
  return m;
}

void put_pivot(std::ostream& os, const PivotFactor& p) {
  put<std::uint8_t>(os, p.spd() ? 1 : 0);
  put_matrix(os, p.packed());
  put<std::uint64_t>(os, static_cast<std::uint64_t>(p.perm().size()));
  for (Index i = 0; i < p.perm().size(); ++i) put<std::int32_t>(os, p.perm()[i]);
}

PivotFactor get_pivot(std::istream& is) {
  const bool spd = get<std::uint8_t>(is) != 0;
  Matrix packed = get_matrix(is);
  const auto np = get<std::uint64_t>(is);
  Eigen::VectorXi perm(static_cast<Index>(np));
  for (Index i = 0; i < perm.size(); ++i) perm[i] = get<std::int32_t>(is);
  return PivotFactor::from_packed(std::move(packed), std::move(perm), spd);
}

}  // namespace

void Factorization::save(std::ostream& os) const {
  put(os, kMagic);
  put(os, kVersion);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(n_));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(dim_));
  put<std::uint8_t>(os, static_cast<std::uint8_t>(method_));
  put<std::uint8_t>(os, spd_ ? 1 : 0);
  put(os, eps_);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(klevels_.size()));
  for (Index k : klevels_) put<std::int64_t>(os, k);
  put<std::uint64_t>(os, factors_.size());
  for (const SkelFactor& f : factors_) {
    put<std::uint8_t>(os, static_cast<std::uint8_t>(f.kind));
    put<std::int64_t>(os, f.box_id);
    put<std::int32_t>(os, f.level);
    put<std::uint8_t>(os, f.spd ? 1 : 0);
    put_ids(os, f.redundant);
    put_ids(os, f.skeleton);
    put_ids(os, f.nearf);
    put_matrix(os, f.interp);
    put_matrix(os, f.eu);
    put_matrix(os, f.el);
    put_pivot(os, f.pivot);
  }
  put_ids(os, terminal_ids_);
  put_pivot(os, terminal_pivot_);
  require(static_cast<bool>(os), "save: stream write failed");
}

Factorization Factorization::load(std::istream& is) {
  require(get<std::uint32_t>(is) == kMagic, "load: bad magic");
  require(get<std::uint32_t>(is) == kVersion, "load: unsupported version");
  Factorization fac;
  fac.n_ = static_cast<Index>(get<std::uint64_t>(is));
  fac.dim_ = static_cast<int>(get<std::uint32_t>(is));
  fac.method_ = static_cast<Method>(get<std::uint8_t>(is));
  fac.spd_ = get<std::uint8_t>(is) != 0;
  fac.eps_ = get<double>(is);
  const auto nk = get<std::uint32_t>(is);
  fac.klevels_.resize(nk);
  for (auto& k : fac.klevels_) k = get<std::int64_t>(is);
  const auto nf = get<std::uint64_t>(is);
  fac.factors_.resize(nf);
  for (SkelFactor& f : fac.factors_) {
    f.kind = static_cast<SkelFactor::Kind>(get<std::uint8_t>(is));
    f.box_id = get<std::int64_t>(is);
    f.level = get<std::int32_t>(is);
    f.spd = get<std::uint8_t>(is) != 0;
    f.redundant = get_ids(is);
    f.skeleton = get_ids(is);
    f.nearf = get_ids(is);
    f.interp = get_matrix(is);
    f.eu = get_matrix(is);
    f.el = get_matrix(is);
    f.pivot = get_pivot(is);
  }
  fac.terminal_ids_ = get_ids(is);
  fac.terminal_pivot_ = get_pivot(is);
  for (const SkelFactor& f : fac.factors_)
    fac.perm_.insert(fac.perm_.end(), f.redundant.begin(), f.redundant.end());
  fac.perm_.insert(fac.perm_.end(), fac.terminal_ids_.begin(), fac.terminal_ids_.end());
  return fac;
}

}  // namespace skelfac
