#pragma once

#include <iosfwd>
#include <vector>

#include "skelfac/skeletonization.hpp"

namespace skelfac {

enum class Method : std::uint8_t { RsS = 0, RsWs = 1 };

struct FactorOptions {
  double eps = 1e-6;
  Index n_proxy = 64;
  bool spd = false;
  double proxy_radius = 2.5;
  bool use_proxy = true;
  bool validate = false;  // run structural cache scans while factoring
  std::uint64_t proxy_seed = 0x5ca1ab1eULL;
};

/// Multiplicative approximate factorization of a kernel matrix: an ordered
/// sequence of skeletonization operators around a factored block-diagonal
/// middle matrix,
///   F = (V_1 ... V_n) P D P^* (W_n ... W_1) ~= K.
/// Every constituent factor is exactly invertible, so solve() is the exact
/// inverse of apply().  In spd mode V_i = W_i^* and the block square root
/// and log-determinant are available.  Immutable once built; apply/solve
/// are read-only and safe to call concurrently.
class Factorization {
 public:
  Index size() const { return n_; }
  int dim() const { return dim_; }
  Method method() const { return method_; }
  bool spd() const { return spd_; }
  double eps() const { return eps_; }

  Vector apply(const Vector& x) const;          // F x
  Vector apply_adjoint(const Vector& x) const;  // F^* x
  Vector solve(const Vector& b) const;          // F^{-1} b
  Vector solve_adjoint(const Vector& b) const;  // F^{-*} b

  Vector apply_sqrt(const Vector& x) const;          // F^{1/2} x        (spd)
  Vector apply_sqrt_adjoint(const Vector& x) const;  // (F^{1/2})^* x    (spd)
  Vector solve_sqrt(const Vector& b) const;          // F^{-1/2} b       (spd)
  double logdet() const;                             // log |F|          (spd)

  /// Stored dense-block footprint in bytes (interpolation, elimination and
  /// pivot blocks; the m_f statistic).
  std::size_t bytes() const;

  /// Largest skeleton size per processed level, finest first.
  const std::vector<Index>& skeleton_counts() const { return klevels_; }

  /// Concatenated redundant sets in elimination order followed by the
  /// terminal active set: the final permutation ordering the middle
  /// block-diagonal matrix contiguously.
  const IdList& final_permutation() const { return perm_; }

  const std::vector<SkelFactor>& factors() const { return factors_; }
  const IdList& terminal_ids() const { return terminal_ids_; }

  /// Versioned binary serialization (native endianness); see README for
  /// the record layout.
  void save(std::ostream& os) const;
  static Factorization load(std::istream& is);

 private:
  static Factorization build(MatrixSource& src, const Tree& tree, const FactorOptions& opts,
                             Method method);
  friend Factorization factor_rss(MatrixSource&, const Tree&, const FactorOptions&);
  friend Factorization factor_rsws(MatrixSource&, const Tree&, const FactorOptions&);

  void middle_apply(Vector& x, int mode) const;  // 0 mult, 1 solve, 2 mult^*, 3 solve^*

  Index n_ = 0;
  int dim_ = 0;
  Method method_ = Method::RsS;
  bool spd_ = false;
  double eps_ = 0.0;
  std::vector<SkelFactor> factors_;
  IdList terminal_ids_;
  PivotFactor terminal_pivot_;
  IdList perm_;
  std::vector<Index> klevels_;
};

/// Strong recursive skeletonization: bottom-up strong passes over levels
/// 1 .. L-2, then the factored block-diagonal remainder.
Factorization factor_rss(MatrixSource& src, const Tree& tree, const FactorOptions& opts);

/// Hybrid variant: per level a weak pass then a strong pass, plus a final
/// weak pass at level L-1 to shrink the terminal block.
Factorization factor_rsws(MatrixSource& src, const Tree& tree, const FactorOptions& opts);

}  // namespace skelfac
