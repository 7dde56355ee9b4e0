#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <limits>

#include "skelfac/common.hpp"

namespace skelfac {

/// A dense matrix block together with the global row/column ids it covers.
struct DenseBlock {
  IdList rows;
  IdList cols;
  Matrix values;
};

/// Outcome of an interpolative decomposition of the columns of a matrix:
/// a split of the column positions into skeleton and redundant parts and an
/// interpolation matrix with  M(:,redundant) ~= M(:,skeleton) * interp.
template <class Scalar>
struct IdResultT {
  std::vector<Index> skeleton;   // column positions, in pivot order
  std::vector<Index> redundant;  // remaining column positions
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> interp;  // |S| x |R|
};

using IdResult = IdResultT<double>;

/// Interpolative decomposition via greedy column-pivoted QR.
///
/// Truncation keeps pivot columns while |R(j,j)| > eps * |R(0,0)|; the
/// interpolation matrix is the triangular solve of the leading R factor
/// against the trailing columns.  A matrix with no rows is a documented
/// degenerate case: every column is redundant and interp is empty.
/// Pivot selection is scale invariant and breaks ties toward the lowest
/// column index.
template <class Scalar>
IdResultT<Scalar> interp_decomp(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& M, double eps) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  require(eps >= 0.0, "interp_decomp: eps must be nonnegative");
  IdResultT<Scalar> out;
  const Index n = M.cols();
  if (n == 0) {
    out.interp.resize(0, 0);
    return out;
  }
  if (M.rows() == 0) {
    out.redundant.resize(n);
    for (Index j = 0; j < n; ++j) out.redundant[j] = j;
    out.interp.resize(0, n);
    return out;
  }
  require(M.allFinite(), "interp_decomp: matrix has non-finite entries");

  Eigen::ColPivHouseholderQR<Mat> qr(M);
  const auto& piv = qr.colsPermutation().indices();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rdiag = qr.matrixQR().diagonal();
  const double d0 = std::abs(rdiag[0]);

  Index k = 0;
  const Index kmax = std::min(M.rows(), n);
  while (k < kmax && std::abs(rdiag[k]) > eps * d0) ++k;

  out.skeleton.resize(k);
  out.redundant.resize(n - k);
  for (Index j = 0; j < k; ++j) out.skeleton[j] = piv[j];
  for (Index j = k; j < n; ++j) out.redundant[j - k] = piv[j];

  // interp = R11^{-1} R12 from the pivoted QR factor.
  out.interp = qr.matrixQR().block(0, k, k, n - k);
  qr.matrixQR()
      .topLeftCorner(k, k)
      .template triangularView<Eigen::Upper>()
      .solveInPlace(out.interp);
  return out;
}

/// Residual of an ID against the matrix it was computed from,
/// ||M(:,R) - M(:,S) T||_2.  Test and diagnostic helper.
template <class Scalar>
double id_residual(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& M,
                   const IdResultT<Scalar>& id) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat resid(M.rows(), static_cast<Index>(id.redundant.size()));
  for (std::size_t j = 0; j < id.redundant.size(); ++j)
    resid.col(static_cast<Index>(j)) = M.col(id.redundant[j]);
  Mat sk(M.rows(), static_cast<Index>(id.skeleton.size()));
  for (std::size_t j = 0; j < id.skeleton.size(); ++j)
    sk.col(static_cast<Index>(j)) = M.col(id.skeleton[j]);
  resid -= sk * id.interp;
  if (resid.size() == 0) return 0.0;
  return resid.operatorNorm();
}

/// Factored square pivot block.  Holds either a partial-pivoted LU
/// (P X = L U, packed) or a Cholesky factor (X = L L^*) when spd.
/// Solves, transposed solves, products, the lower square-root factor and
/// the log-determinant are all served from the packed form.
template <class Scalar>
class PivotFactorT {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  PivotFactorT() = default;

  static PivotFactorT factor(const Mat& X, bool spd) {
    require(X.rows() == X.cols(), "pivot_factor: block must be square");
    require(X.allFinite(), "pivot_factor: block has non-finite entries");
    PivotFactorT f;
    f.spd_ = spd;
    const Index n = X.rows();
    if (n == 0) return f;
    if (spd) {
      Eigen::LLT<Mat> llt(X);
      require(llt.info() == Eigen::Success,
              "pivot_factor: spd requested but block is not positive definite");
      f.packed_ = llt.matrixL();
    } else {
      Eigen::PartialPivLU<Mat> lu(X);
      f.packed_ = lu.matrixLU();
      f.perm_ = lu.permutationP().indices();
      const double thr =
          std::numeric_limits<double>::epsilon() * X.norm() * std::max<Index>(n, 1);
      for (Index i = 0; i < n; ++i)
        require(std::abs(f.packed_(i, i)) > thr, "pivot_factor: numerically singular block");
    }
    return f;
  }

  /// Rebuild from serialized storage.
  static PivotFactorT from_packed(Mat packed, Eigen::VectorXi perm, bool spd) {
    PivotFactorT f;
    f.spd_ = spd;
    f.packed_ = std::move(packed);
    f.perm_ = std::move(perm);
    return f;
  }

  Index size() const { return packed_.rows(); }
  bool spd() const { return spd_; }
  const Mat& packed() const { return packed_; }
  const Eigen::VectorXi& perm() const { return perm_; }
  std::size_t bytes() const {
    return sizeof(Scalar) * static_cast<std::size_t>(packed_.size()) +
           sizeof(int) * static_cast<std::size_t>(perm_.size());
  }

  Mat solve(Mat b) const {  // X^{-1} b
    if (size() == 0) return b;
    if (spd_) {
      packed_.template triangularView<Eigen::Lower>().solveInPlace(b);
      packed_.template triangularView<Eigen::Lower>().adjoint().solveInPlace(b);
      return b;
    }
    b = permutation() * b;
    packed_.template triangularView<Eigen::UnitLower>().solveInPlace(b);
    packed_.template triangularView<Eigen::Upper>().solveInPlace(b);
    return b;
  }

  Mat solve_transpose(Mat b) const {  // X^{-T} b
    if (size() == 0) return b;
    if (spd_) {
      // X^T = conj(L) L^T
      packed_.conjugate().template triangularView<Eigen::Lower>().solveInPlace(b);
      packed_.template triangularView<Eigen::Lower>().transpose().solveInPlace(b);
      return b;
    }
    // X^T = U^T L^T P, so X^{-T} b = P^{-1} L^{-T} U^{-T} b.
    packed_.template triangularView<Eigen::Upper>().transpose().solveInPlace(b);
    packed_.template triangularView<Eigen::UnitLower>().transpose().solveInPlace(b);
    return permutation().inverse() * b;
  }

  Mat solve_adjoint(const Mat& b) const {  // X^{-*} b
    return solve_transpose(b.conjugate()).conjugate();
  }

  Mat multiply(Mat b) const {  // X b
    if (size() == 0) return b;
    if (spd_) {
      b = packed_.template triangularView<Eigen::Lower>().adjoint() * b;
      return packed_.template triangularView<Eigen::Lower>() * b;
    }
    b = packed_.template triangularView<Eigen::Upper>() * b;
    b = packed_.template triangularView<Eigen::UnitLower>() * b;
    return permutation().inverse() * b;
  }

  Mat multiply_adjoint(Mat b) const {  // X^* b
    if (size() == 0) return b;
    if (spd_) {
      b = packed_.template triangularView<Eigen::Lower>().adjoint() * b;
      return packed_.template triangularView<Eigen::Lower>() * b;
    }
    b = permutation() * b;
    b = packed_.template triangularView<Eigen::UnitLower>().adjoint() * b;
    return packed_.template triangularView<Eigen::Upper>().adjoint() * b;
  }

  /// Lower Cholesky factor (spd only): X = sqrt_lower() * sqrt_lower()^*.
  const Mat& sqrt_lower() const {
    require(spd_, "sqrt_lower: available only for spd blocks");
    return packed_;
  }

  Mat sqrt_multiply(const Mat& b) const {
    require(spd_, "sqrt_multiply: available only for spd blocks");
    return packed_.template triangularView<Eigen::Lower>() * b;
  }

  Mat sqrt_multiply_adjoint(const Mat& b) const {
    require(spd_, "sqrt_multiply_adjoint: available only for spd blocks");
    return packed_.template triangularView<Eigen::Lower>().adjoint() * b;
  }

  Mat sqrt_solve(Mat b) const {  // L^{-1} b
    require(spd_, "sqrt_solve: available only for spd blocks");
    if (size() == 0) return b;
    packed_.template triangularView<Eigen::Lower>().solveInPlace(b);
    return b;
  }

  double logdet() const {
    require(spd_, "logdet: available only for spd blocks");
    double s = 0.0;
    for (Index i = 0; i < size(); ++i) s += std::log(std::real(packed_(i, i)));
    return 2.0 * s;
  }

 private:
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> permutation() const {
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> p;
    p.indices() = perm_;
    return p;
  }

  bool spd_ = false;
  Mat packed_;
  Eigen::VectorXi perm_;
};

using PivotFactor = PivotFactorT<double>;

template <class Scalar>
PivotFactorT<Scalar> pivot_factor(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X, bool spd) {
  return PivotFactorT<Scalar>::factor(X, spd);
}

/// Result of decoupling a pivot index set I from a coupled set J:
/// the nonzero off-diagonal blocks of the unit-triangular elimination
/// operators and the Schur complement on J.
template <class Scalar>
struct BlockEliminationT {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> l_block;  // -A_JI A_II^{-1}
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> u_block;  // -A_II^{-1} A_IJ
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> schur;    // A_JJ - A_JI A_II^{-1} A_IJ
};

using BlockElimination = BlockEliminationT<double>;

template <class Scalar>
BlockEliminationT<Scalar> block_eliminate(
    const PivotFactorT<Scalar>& a_ii,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a_ji,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a_ij,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a_jj) {
  require(a_ii.size() == a_ji.cols() && a_ii.size() == a_ij.rows(),
          "block_eliminate: pivot dimensions do not match coupling blocks");
  require(a_jj.rows() == a_ji.rows() && a_jj.cols() == a_ij.cols(),
          "block_eliminate: Schur target dimensions do not match");
  BlockEliminationT<Scalar> out;
  out.u_block = -a_ii.solve(a_ij);
  out.l_block = -(a_ii.solve_transpose(a_ji.transpose())).transpose();
  out.schur = a_jj + a_ji * out.u_block;
  return out;
}

}  // namespace skelfac
