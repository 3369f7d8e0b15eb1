#pragma once

// Textbook Krylov solvers for A x = b, kept deliberately plain: they are the
// references the accelerators are checked against on linear problems.
// `apply` is any callable mapping VectorX<Scalar> -> VectorX<Scalar>.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "accelkit/la_core.hpp"
#include "accelkit/random.hpp"

namespace accelkit {

enum class KrylovStatus { Converged, MaxIterations, Stalled };

inline const char* to_string(KrylovStatus s) {
  switch (s) {
    case KrylovStatus::Converged: return "converged";
    case KrylovStatus::MaxIterations: return "max_iterations";
    case KrylovStatus::Stalled: return "stalled";
  }
  return "unknown";
}

template <typename Scalar>
struct KrylovTrace {
  std::vector<Scalar> residual_norms;      // ||b - A x_k||_2, k = 0..iterations
  std::vector<VectorX<Scalar>> iterates;   // x_k, k = 0..iterations
  KrylovStatus status = KrylovStatus::MaxIterations;
  int iterations() const { return static_cast<int>(iterates.size()) - 1; }
  const VectorX<Scalar>& solution() const { return iterates.back(); }
};

namespace detail {

template <typename Scalar, typename Apply>
void record(KrylovTrace<Scalar>& t, const Apply& apply, const VectorX<Scalar>& b, const VectorX<Scalar>& x) {
  t.iterates.push_back(x);
  t.residual_norms.push_back((b - apply(x)).norm());
}

template <typename Scalar>
void check_system(Index n, const VectorX<Scalar>& b, const VectorX<Scalar>& x0, int maxit) {
  if (b.size() != n || x0.size() != n) throw Error(ErrorCode::DimensionMismatch, "krylov: b/x0 length mismatch");
  if (maxit < 0) throw Error(ErrorCode::InvalidSpec, "krylov: maxit must be >= 0");
  require_finite(b, "b");
  require_finite(x0, "x0");
}

}  // namespace detail

/// Unrestarted GMRES (modified Gram-Schmidt Arnoldi, Givens rotations). The
/// iterate x_k is formed explicitly at every step.
template <typename Scalar, typename Apply>
KrylovTrace<Scalar> gmres_solve(const Apply& apply, const VectorX<Scalar>& b, const VectorX<Scalar>& x0,
                                Scalar tol, int maxit) {
  const Index n = b.size();
  detail::check_system(n, b, x0, maxit);
  KrylovTrace<Scalar> t;
  VectorX<Scalar> r0 = b - apply(x0);
  t.iterates.push_back(x0);
  t.residual_norms.push_back(r0.norm());
  const Scalar beta = r0.norm();
  if (beta < tol) {
    t.status = KrylovStatus::Converged;
    return t;
  }

  const int kmax = static_cast<int>(std::min<Index>(maxit, n));
  MatrixX<Scalar> v = MatrixX<Scalar>::Zero(n, kmax + 1);
  MatrixX<Scalar> h = MatrixX<Scalar>::Zero(kmax + 1, kmax);
  VectorX<Scalar> cs = VectorX<Scalar>::Zero(kmax), sn = VectorX<Scalar>::Zero(kmax);
  VectorX<Scalar> g = VectorX<Scalar>::Zero(kmax + 1);
  g(0) = beta;
  v.col(0) = r0 / beta;

  for (int k = 0; k < kmax; ++k) {
    VectorX<Scalar> w = apply(VectorX<Scalar>(v.col(k)));
    for (int i = 0; i <= k; ++i) {
      h(i, k) = v.col(i).dot(w);
      w -= h(i, k) * v.col(i);
    }
    h(k + 1, k) = w.norm();
    const bool lucky = h(k + 1, k) <= Scalar(1e-14) * beta;
    if (!lucky) v.col(k + 1) = w / h(k + 1, k);

    for (int i = 0; i < k; ++i) {
      const Scalar tmp = cs(i) * h(i, k) + sn(i) * h(i + 1, k);
      h(i + 1, k) = -sn(i) * h(i, k) + cs(i) * h(i + 1, k);
      h(i, k) = tmp;
    }
    const Scalar rho = std::hypot(h(k, k), h(k + 1, k));
    if (rho == Scalar(0)) {
      t.status = KrylovStatus::Stalled;
      return t;
    }
    cs(k) = h(k, k) / rho;
    sn(k) = h(k + 1, k) / rho;
    h(k, k) = rho;
    h(k + 1, k) = Scalar(0);
    g(k + 1) = -sn(k) * g(k);
    g(k) = cs(k) * g(k);

    const VectorX<Scalar> y =
        h.topLeftCorner(k + 1, k + 1).template triangularView<Eigen::Upper>().solve(g.head(k + 1));
    const VectorX<Scalar> x = x0 + v.leftCols(k + 1) * y;
    detail::record(t, apply, b, x);
    if (t.residual_norms.back() < tol) {
      t.status = KrylovStatus::Converged;
      return t;
    }
    if (lucky) {
      t.status = KrylovStatus::Stalled;
      return t;
    }
  }
  t.status = KrylovStatus::MaxIterations;
  return t;
}

/// ORTHOMIN(m): each search direction is A^T A-orthogonalised against the m
/// previous ones. ORTHOMIN(0) is the minimal-residual iteration.
template <typename Scalar, typename Apply>
KrylovTrace<Scalar> orthomin_solve(const Apply& apply, const VectorX<Scalar>& b, const VectorX<Scalar>& x0, int m,
                                   Scalar tol, int maxit) {
  if (m < 0) throw Error(ErrorCode::InvalidSpec, "orthomin depth must be >= 0");
  detail::check_system(b.size(), b, x0, maxit);
  KrylovTrace<Scalar> t;
  VectorX<Scalar> x = x0;
  VectorX<Scalar> r = b - apply(x);
  t.iterates.push_back(x);
  t.residual_norms.push_back(r.norm());
  if (r.norm() < tol) {
    t.status = KrylovStatus::Converged;
    return t;
  }

  std::vector<VectorX<Scalar>> p_hist, ap_hist;
  VectorX<Scalar> p = r;
  VectorX<Scalar> ap = apply(p);
  for (int k = 0; k < maxit; ++k) {
    const Scalar denom = ap.squaredNorm();
    if (denom == Scalar(0)) {
      t.status = KrylovStatus::Stalled;
      return t;
    }
    const Scalar a = r.dot(ap) / denom;
    x += a * p;
    r -= a * ap;
    detail::record(t, apply, b, x);
    if (t.residual_norms.back() < tol) {
      t.status = KrylovStatus::Converged;
      return t;
    }

    p_hist.push_back(p);
    ap_hist.push_back(ap);
    if (static_cast<int>(p_hist.size()) > m) {
      p_hist.erase(p_hist.begin());
      ap_hist.erase(ap_hist.begin());
    }
    const VectorX<Scalar> ar = apply(r);
    p = r;
    ap = ar;
    for (std::size_t j = 0; j < p_hist.size(); ++j) {
      const Scalar bj = ar.dot(ap_hist[j]) / ap_hist[j].squaredNorm();
      p -= bj * p_hist[j];
      ap -= bj * ap_hist[j];
    }
  }
  t.status = KrylovStatus::MaxIterations;
  return t;
}

/// Throws NotSymmetric unless u^T A v == v^T A u (to 1e-10 relative) on five
/// fixed random pairs.
template <typename Scalar, typename Apply>
void require_symmetric(const Apply& apply, Index n, Scalar rel_tol = Scalar(1e-10)) {
  CounterRng rng(0x5eed5eedULL);
  for (int i = 0; i < 5; ++i) {
    const VectorX<Scalar> u = rng.uniform_vector(n, -1.0, 1.0).template cast<Scalar>();
    const VectorX<Scalar> v = rng.uniform_vector(n, -1.0, 1.0).template cast<Scalar>();
    const VectorX<Scalar> au = apply(u), av = apply(v);
    const Scalar scale = std::max(u.norm() * av.norm(), v.norm() * au.norm());
    if (std::abs(u.dot(av) - v.dot(au)) > rel_tol * scale) {
      throw Error(ErrorCode::NotSymmetric, "operator failed the symmetry probe");
    }
  }
}

/// Conjugate residual method; requires a symmetric operator.
template <typename Scalar, typename Apply>
KrylovTrace<Scalar> cr_solve(const Apply& apply, const VectorX<Scalar>& b, const VectorX<Scalar>& x0, Scalar tol,
                             int maxit) {
  detail::check_system(b.size(), b, x0, maxit);
  require_symmetric<Scalar>(apply, b.size());
  KrylovTrace<Scalar> t;
  VectorX<Scalar> x = x0;
  VectorX<Scalar> r = b - apply(x);
  t.iterates.push_back(x);
  t.residual_norms.push_back(r.norm());
  if (r.norm() < tol) {
    t.status = KrylovStatus::Converged;
    return t;
  }
  VectorX<Scalar> ar = apply(r);
  VectorX<Scalar> p = r, ap = ar;
  Scalar rar = r.dot(ar);
  for (int k = 0; k < maxit; ++k) {
    const Scalar denom = ap.squaredNorm();
    if (denom == Scalar(0)) {
      t.status = KrylovStatus::Stalled;
      return t;
    }
    const Scalar a = rar / denom;
    x += a * p;
    r -= a * ap;
    detail::record(t, apply, b, x);
    if (t.residual_norms.back() < tol) {
      t.status = KrylovStatus::Converged;
      return t;
    }
    ar = apply(r);
    const Scalar rar_next = r.dot(ar);
    if (rar == Scalar(0)) {
      t.status = KrylovStatus::Stalled;
      return t;
    }
    const Scalar beta = rar_next / rar;
    rar = rar_next;
    p = r + beta * p;
    ap = ar + beta * ap;
  }
  t.status = KrylovStatus::MaxIterations;
  return t;
}

/// Minimal-residual iteration x += (r, Ar)/(Ar, Ar) r.
template <typename Scalar, typename Apply>
KrylovTrace<Scalar> minimal_residual_solve(const Apply& apply, const VectorX<Scalar>& b, const VectorX<Scalar>& x0,
                                           Scalar tol, int maxit) {
  detail::check_system(b.size(), b, x0, maxit);
  KrylovTrace<Scalar> t;
  VectorX<Scalar> x = x0;
  VectorX<Scalar> r = b - apply(x);
  t.iterates.push_back(x);
  t.residual_norms.push_back(r.norm());
  if (r.norm() < tol) {
    t.status = KrylovStatus::Converged;
    return t;
  }
  for (int k = 0; k < maxit; ++k) {
    const VectorX<Scalar> ar = apply(r);
    const Scalar denom = ar.squaredNorm();
    if (denom == Scalar(0)) {
      t.status = KrylovStatus::Stalled;
      return t;
    }
    const Scalar a = r.dot(ar) / denom;
    x += a * r;
    r -= a * ar;
    detail::record(t, apply, b, x);
    if (t.residual_norms.back() < tol) {
      t.status = KrylovStatus::Converged;
      return t;
    }
  }
  t.status = KrylovStatus::MaxIterations;
  return t;
}

}  // namespace accelkit
