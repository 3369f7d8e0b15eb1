#pragma once

// Dense kernels shared by every accelerator: pivoted QR, the unconstrained
// least-squares solve in the affine (gamma) frame, and the constrained
// mixing problem  min ||F alpha||_2  s.t.  sum(alpha) = 1.

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "accelkit/error.hpp"

namespace accelkit {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Index = Eigen::Index;

inline constexpr double kDefaultRankTol = 1e-12;

/// Thin column-pivoted QR:  M * P = Q * R.
template <typename Scalar>
struct QrFactorization {
  MatrixX<Scalar> q;
  MatrixX<Scalar> r;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> col_perm;
  Index numerical_rank = 0;
};

/// Weights of an affine combination (alpha sums to one) and the same
/// combination expressed in the difference-column frame.
template <typename Scalar>
struct MixingCoefficients {
  VectorX<Scalar> alpha;
  VectorX<Scalar> gamma;
};

template <typename Scalar>
struct MixingResult {
  MixingCoefficients<Scalar> coeffs;
  VectorX<Scalar> mixed_residual;
  Index retained_columns = 0;  // difference columns kept by the rank guard
};

enum class LsStrategy {
  Auto,             // explicit normal equations for <= 2 well-conditioned columns, QR otherwise
  Qr,               // always column-pivoted QR
  NormalEquations,  // always the explicit pseudoinverse form
};

namespace detail {

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorCode::NonFiniteInput, std::string(what) + " contains NaN/Inf");
}

template <typename Scalar>
Index rank_from_diagonal(const MatrixX<Scalar>& r, Scalar rank_tol) {
  const Index k = std::min(r.rows(), r.cols());
  if (k == 0) return 0;
  const Scalar lead = std::abs(r(0, 0));
  Index rank = 0;
  for (Index i = 0; i < k; ++i) {
    if (std::abs(r(i, i)) > rank_tol * lead) ++rank;
  }
  return rank;
}

}  // namespace detail

template <typename Derived>
QrFactorization<typename Derived::Scalar> qr_factor(
    const Eigen::MatrixBase<Derived>& m,
    typename Derived::Scalar rank_tol = typename Derived::Scalar(kDefaultRankTol)) {
  using Scalar = typename Derived::Scalar;
  if (m.cols() < 1 || m.rows() < m.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "qr_factor requires rows >= cols >= 1");
  }
  detail::require_finite(m, "qr_factor input");

  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(m);
  const Index n = m.cols();
  QrFactorization<Scalar> out;
  out.q = qr.householderQ() * MatrixX<Scalar>::Identity(m.rows(), n);
  out.r = qr.matrixQR().topLeftCorner(n, n).template triangularView<Eigen::Upper>();
  out.col_perm = qr.colsPermutation();
  out.numerical_rank = detail::rank_from_diagonal<Scalar>(out.r, rank_tol);
  return out;
}

/// Difference columns  D_j = M_{j+1} - M_j,  j = 0..cols-2.
template <typename Derived>
MatrixX<typename Derived::Scalar> difference_columns(const Eigen::MatrixBase<Derived>& m) {
  const Index k = m.cols();
  if (k < 2) return MatrixX<typename Derived::Scalar>(m.rows(), 0);
  return m.rightCols(k - 1) - m.leftCols(k - 1);
}

/// argmin_gamma ||rhs - basis * gamma||_2 over the numerically independent
/// columns of `basis`; columns dropped by the rank guard get gamma = 0.
template <typename DerivedA, typename DerivedB>
VectorX<typename DerivedA::Scalar> solve_unconstrained_ls(
    const Eigen::MatrixBase<DerivedA>& basis, const Eigen::MatrixBase<DerivedB>& rhs,
    typename DerivedA::Scalar rank_tol = typename DerivedA::Scalar(kDefaultRankTol),
    Index* retained = nullptr) {
  using Scalar = typename DerivedA::Scalar;
  if (basis.cols() < 1) throw Error(ErrorCode::DimensionMismatch, "basis has no columns");
  if (rhs.size() != basis.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "rhs length " + std::to_string(rhs.size()) +
                                                  " != basis rows " + std::to_string(basis.rows()));
  }
  detail::require_finite(basis, "basis");
  detail::require_finite(rhs, "rhs");

  const Index cols = basis.cols();
  VectorX<Scalar> gamma = VectorX<Scalar>::Zero(cols);

  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(basis);
  const Index diag = std::min(basis.rows(), cols);
  const MatrixX<Scalar> r = qr.matrixQR().topLeftCorner(diag, diag).template triangularView<Eigen::Upper>();
  const Index rank = detail::rank_from_diagonal<Scalar>(r, rank_tol);
  if (retained) *retained = rank;
  if (rank == 0) return gamma;

  VectorX<Scalar> c = rhs;
  c.applyOnTheLeft(qr.householderQ().transpose());
  const VectorX<Scalar> y =
      r.topLeftCorner(rank, rank).template triangularView<Eigen::Upper>().solve(c.head(rank));
  const auto& perm = qr.colsPermutation().indices();
  for (Index i = 0; i < rank; ++i) gamma(perm(i)) = y(i);
  return gamma;
}

/// Same problem through the explicit pseudoinverse  (D^T D)^{-1} D^T rhs.
/// Only meaningful for full-rank, modestly conditioned bases.
template <typename DerivedA, typename DerivedB>
VectorX<typename DerivedA::Scalar> solve_normal_equations(const Eigen::MatrixBase<DerivedA>& basis,
                                                          const Eigen::MatrixBase<DerivedB>& rhs) {
  using Scalar = typename DerivedA::Scalar;
  if (rhs.size() != basis.rows()) throw Error(ErrorCode::DimensionMismatch, "rhs length != basis rows");
  const MatrixX<Scalar> gram = basis.transpose() * basis;
  const VectorX<Scalar> proj = basis.transpose() * rhs;
  if (gram.rows() == 1) {
    if (gram(0, 0) == Scalar(0)) throw Error(ErrorCode::SingularWindow, "zero difference column");
    return VectorX<Scalar>::Constant(1, proj(0) / gram(0, 0));
  }
  if (gram.rows() == 2) {
    const Scalar det = gram(0, 0) * gram(1, 1) - gram(0, 1) * gram(1, 0);
    if (det == Scalar(0)) throw Error(ErrorCode::SingularWindow, "singular 2x2 Gram matrix");
    VectorX<Scalar> g(2);
    g(0) = (gram(1, 1) * proj(0) - gram(0, 1) * proj(1)) / det;
    g(1) = (gram(0, 0) * proj(1) - gram(1, 0) * proj(0)) / det;
    return g;
  }
  Eigen::LDLT<MatrixX<Scalar>> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw Error(ErrorCode::SingularWindow, "Gram matrix not positive definite");
  }
  return ldlt.solve(proj);
}

/// alpha_0 = gamma_1, alpha_i = gamma_{i+1} - gamma_i, alpha_m = 1 - gamma_m.
template <typename Derived>
VectorX<typename Derived::Scalar> gamma_to_alpha(const Eigen::MatrixBase<Derived>& gamma) {
  using Scalar = typename Derived::Scalar;
  const Index m = gamma.size();
  VectorX<Scalar> alpha(m + 1);
  if (m == 0) {
    alpha(0) = Scalar(1);
    return alpha;
  }
  alpha(0) = gamma(0);
  for (Index i = 1; i < m; ++i) alpha(i) = gamma(i) - gamma(i - 1);
  alpha(m) = Scalar(1) - gamma(m - 1);
  return alpha;
}

/// Inverse of gamma_to_alpha: gamma_i is the partial sum of the first i weights.
template <typename Derived>
VectorX<typename Derived::Scalar> alpha_to_gamma(const Eigen::MatrixBase<Derived>& alpha) {
  using Scalar = typename Derived::Scalar;
  const Index m = alpha.size() - 1;
  VectorX<Scalar> gamma(std::max<Index>(m, 0));
  Scalar acc(0);
  for (Index i = 0; i < m; ++i) {
    acc += alpha(i);
    gamma(i) = acc;
  }
  return gamma;
}

namespace detail {

// Normal equations square the condition number, so the explicit path is only
// taken when the Gram matrix is far from singular.
template <typename Scalar>
bool small_window_is_safe(const MatrixX<Scalar>& diffs) {
  if (diffs.cols() == 0 || diffs.cols() > 2) return false;
  const MatrixX<Scalar> gram = diffs.transpose() * diffs;
  const Scalar lead = gram.diagonal().maxCoeff();
  if (!(lead > Scalar(0))) return false;
  if (gram.rows() == 1) return true;
  const Scalar det = gram(0, 0) * gram(1, 1) - gram(0, 1) * gram(1, 0);
  // det / lead^2 ~ (r11 / r00)^2 for the pivoted QR of the same columns
  return det / (lead * lead) > Scalar(1e-8);
}

}  // namespace detail

/// min ||F alpha||_2 subject to sum(alpha) = 1 over the columns of F.
template <typename Derived>
MixingResult<typename Derived::Scalar> solve_mixing(
    const Eigen::MatrixBase<Derived>& residual_columns, LsStrategy strategy = LsStrategy::Auto,
    typename Derived::Scalar rank_tol = typename Derived::Scalar(kDefaultRankTol)) {
  using Scalar = typename Derived::Scalar;
  if (residual_columns.cols() < 1) throw Error(ErrorCode::DimensionMismatch, "no residual columns");
  detail::require_finite(residual_columns, "residual columns");

  const Index last = residual_columns.cols() - 1;
  MixingResult<Scalar> out;
  if (last == 0) {
    out.coeffs.gamma = VectorX<Scalar>(0);
    out.coeffs.alpha = VectorX<Scalar>::Ones(1);
    out.mixed_residual = residual_columns.col(0);
    return out;
  }

  const MatrixX<Scalar> diffs = difference_columns(residual_columns);
  const VectorX<Scalar> rhs = residual_columns.col(last);
  const bool explicit_path =
      strategy == LsStrategy::NormalEquations ||
      (strategy == LsStrategy::Auto && detail::small_window_is_safe<Scalar>(diffs));
  if (explicit_path) {
    out.coeffs.gamma = solve_normal_equations(diffs, rhs);
    out.retained_columns = diffs.cols();
  } else {
    out.coeffs.gamma = solve_unconstrained_ls(diffs, rhs, rank_tol, &out.retained_columns);
  }
  out.coeffs.alpha = gamma_to_alpha(out.coeffs.gamma);
  out.mixed_residual = residual_columns * out.coeffs.alpha;
  return out;
}

}  // namespace accelkit
