#include "skelfac/verify.hpp"

#include <cmath>
#include <random>

namespace skelfac {

LinOp linop_from_dense(Matrix m) {
  auto shared = std::make_shared<Matrix>(std::move(m));
  LinOp op;
  op.n = shared->rows();
  require(shared->rows() == shared->cols(), "linop_from_dense: matrix must be square");
  op.forward = [shared](const Vector& x) { return Vector(*shared * x); };
  op.adjoint = [shared](const Vector& x) { return Vector(shared->transpose() * x); };
  return op;
}

LinOp linop_from_factorization_apply(const Factorization& f) {
  LinOp op;
  op.n = f.size();
  op.forward = [&f](const Vector& x) { return f.apply(x); };
  op.adjoint = [&f](const Vector& x) { return f.apply_adjoint(x); };
  return op;
}

LinOp linop_from_factorization_solve(const Factorization& f) {
  LinOp op;
  op.n = f.size();
  op.forward = [&f](const Vector& x) { return f.solve(x); };
  op.adjoint = [&f](const Vector& x) { return f.solve_adjoint(x); };
  return op;
}

LinOp linop_diff(const LinOp& a, const LinOp& b) {
  require(a.n == b.n, "linop_diff: dimension mismatch");
  LinOp op;
  op.n = a.n;
  op.forward = [a, b](const Vector& x) { return Vector(a.forward(x) - b.forward(x)); };
  op.adjoint = [a, b](const Vector& x) { return Vector(a.adjoint(x) - b.adjoint(x)); };
  return op;
}

LinOp linop_identity_minus(const LinOp& a) {
  LinOp op;
  op.n = a.n;
  op.forward = [a](const Vector& x) { return Vector(x - a.forward(x)); };
  op.adjoint = [a](const Vector& x) { return Vector(x - a.adjoint(x)); };
  return op;
}

LinOp linop_compose(const LinOp& a, const LinOp& b) {
  require(a.n == b.n, "linop_compose: dimension mismatch");
  LinOp op;
  op.n = a.n;
  op.forward = [a, b](const Vector& x) { return a.forward(b.forward(x)); };
  op.adjoint = [a, b](const Vector& x) { return b.adjoint(a.adjoint(x)); };
  return op;
}

Matrix dense_assemble(const MatrixSource& src, const IdList& ids, Index guard_limit) {
  require(static_cast<Index>(ids.size()) <= guard_limit,
          "dense_assemble: index set exceeds the dense-oracle guard");
  return src.entries(ids, ids);
}

OpNormEstimate est_opnorm(const LinOp& a, double tol, std::uint64_t seed, int max_iters) {
  OpNormEstimate est;
  if (a.n == 0) {
    est.converged = true;
    return est;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(a.n);
  for (Index i = 0; i < a.n; ++i) v[i] = gauss(rng);
  v.normalize();

  double prev = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    Vector w = a.forward(v);
    const double sigma = w.norm();
    est.iterations = it;
    est.value = sigma;
    if (sigma == 0.0) {
      est.converged = true;
      return est;
    }
    v = a.adjoint(w);
    const double nv = v.norm();
    if (nv == 0.0) {
      est.converged = true;
      return est;
    }
    v /= nv;
    if (it > 1 && std::abs(sigma - prev) <= tol * sigma) {
      est.converged = true;
      return est;
    }
    prev = sigma;
  }
  return est;  // flagged: converged stays false
}

OpNormEstimate est_opnorm_diff(const LinOp& a, const LinOp& b, double tol,
                               std::uint64_t seed, int max_iters) {
  return est_opnorm(linop_diff(a, b), tol, seed, max_iters);
}

PcgResult pcg_solve(const LinOp& a, const LinOp* preconditioner, const Vector& b,
                    double rtol, int max_iters) {
  require(b.size() == a.n, "pcg_solve: right-hand side length mismatch");
  PcgResult res;
  res.x = Vector::Zero(a.n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }

  Vector r = b;
  Vector z = preconditioner ? preconditioner->forward(r) : r;
  Vector p = z;
  double rz = r.dot(z);

  for (int it = 1; it <= max_iters; ++it) {
    const Vector ap = a.forward(p);
    const double pap = p.dot(ap);
    require(pap > 0.0, "pcg_solve: non-positive curvature (operator not SPD)");
    const double alpha = rz / pap;
    res.x += alpha * p;
    r -= alpha * ap;
    res.iterations = it;
    const double rel = r.norm() / bnorm;
    res.residual_history.push_back(rel);
    if (rel <= rtol) {
      res.converged = true;
      return res;
    }
    z = preconditioner ? preconditioner->forward(r) : r;
    const double rz_next = r.dot(z);
    const double beta = rz_next / rz;
    rz = rz_next;
    p = z + beta * p;
  }
  return res;
}

}  // namespace skelfac
