#pragma once

#include <functional>
#include <memory>

#include "skelfac/factorization.hpp"
#include "skelfac/matrixsource.hpp"

namespace skelfac {

/// Abstract linear operator with forward and adjoint actions.
struct LinOp {
  Index n = 0;
  std::function<Vector(const Vector&)> forward;
  std::function<Vector(const Vector&)> adjoint;
};

LinOp linop_from_dense(Matrix m);
LinOp linop_from_factorization_apply(const Factorization& f);
LinOp linop_from_factorization_solve(const Factorization& f);
LinOp linop_diff(const LinOp& a, const LinOp& b);
LinOp linop_identity_minus(const LinOp& a);        // I - a
LinOp linop_compose(const LinOp& a, const LinOp& b);  // x -> a(b(x))

/// Materialize the current matrix of a source over the given index set.
/// Guarded against accidental huge allocations.
Matrix dense_assemble(const MatrixSource& src, const IdList& ids,
                      Index guard_limit = 16384);

struct OpNormEstimate {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Largest singular value of an operator by power iteration on A^* A,
/// started from a seeded unit Gaussian vector; convergence on successive
/// estimates at relative tolerance `tol`.
OpNormEstimate est_opnorm(const LinOp& a, double tol = 1e-2,
                          std::uint64_t seed = 1234, int max_iters = 300);

/// ||A - B|| by the same power iteration; for the relative forward error
/// divide by est_opnorm(A).
OpNormEstimate est_opnorm_diff(const LinOp& a, const LinOp& b, double tol = 1e-2,
                               std::uint64_t seed = 1234, int max_iters = 300);

struct PcgResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;  // relative residuals per iteration
};

/// Preconditioned conjugate gradients for SPD systems; `preconditioner`
/// applies M^{-1} and may be null.  Throws on non-positive curvature.
PcgResult pcg_solve(const LinOp& a, const LinOp* preconditioner, const Vector& b,
                    double rtol, int max_iters);

}  // namespace skelfac
