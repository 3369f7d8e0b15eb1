#pragma once

// Benchmark problems. Every problem exposes the residual f and the map g with
// g(x) = x + f(x); solvers only ever see those two functions.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <array>
#include <iosfwd>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "accelkit/la_core.hpp"

namespace accelkit {

template <typename Scalar>
struct BasicLinearOperator {
  Index dimension = 0;
  std::function<VectorX<Scalar>(const VectorX<Scalar>&)> apply;
  std::string description;

  VectorX<Scalar> operator()(const VectorX<Scalar>& v) const { return apply(v); }

  /// Dense copy, column by column. Intended for small test operators only.
  MatrixX<Scalar> to_dense() const {
    MatrixX<Scalar> m(dimension, dimension);
    VectorX<Scalar> e = VectorX<Scalar>::Zero(dimension);
    for (Index j = 0; j < dimension; ++j) {
      e(j) = Scalar(1);
      m.col(j) = apply(e);
      e(j) = Scalar(0);
    }
    return m;
  }
};

using LinearOperator = BasicLinearOperator<double>;

LinearOperator make_dense_operator(Matrix a, std::string description = "dense");
LinearOperator make_sparse_operator(Eigen::SparseMatrix<double> a, std::string description = "sparse");

/// A x = b with residual f(x) = b - A x.
struct LinearSystem {
  LinearOperator a;
  Vector b;
};

using VectorMap = std::function<Vector(const Vector&)>;

struct Problem {
  Index dimension = 0;
  VectorMap residual;  // f
  VectorMap map;       // g = x + f
  std::string label;
  std::optional<Vector> exact_solution;
  std::optional<LinearSystem> linear;  // set for linear_* problems

  Vector f(const Vector& x) const { return residual(x); }
  Vector g(const Vector& x) const { return map(x); }
};

enum class ProblemKind {
  LinearTridiag,
  LinearSevendiag,
  LinearSmall2x2,
  LinearCustom,
  DominantLinear,
  SmallNonlinear,
  Bratu,
  DelayNep,
};

struct ProblemSpec {
  ProblemKind kind = ProblemKind::LinearTridiag;
  Index n = 100;                // linear_tridiag / sevendiag / dominant_linear
  double mu = 0.01;             // dominant_linear
  Index grid = 100;             // bratu: grid x grid interior points
  double lambda = 0.5;          // bratu
  double beta = 0.1;            // delay_nep damping folded into f and g
  double tau = 1.0;             // delay_nep
  Index quad_nodes = 32;        // delay_nep
  std::optional<Matrix> matrix;                    // linear_custom, dense
  std::optional<std::filesystem::path> matrix_path;  // linear_custom, Matrix Market
  std::optional<Vector> rhs;    // linear_custom; defaults to e_1
};

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& id);

Problem build_problem(const ProblemSpec& spec);

/// x + beta * f(x).
Vector evaluate_map_damped(const Problem& p, const Vector& x, double beta);

/// Problem whose map is g_beta = x + beta f and residual beta f.
Problem damped(const Problem& p, double beta);

// ---- linear building blocks -------------------------------------------------

/// Banded Toeplitz matrix; bands[k] sits on diagonal offset (k - half).
Eigen::SparseMatrix<double> banded_toeplitz(Index n, const std::vector<double>& bands);
Eigen::SparseMatrix<double> tridiag_matrix(Index n);    // (1, -4, 1)
Eigen::SparseMatrix<double> sevendiag_matrix(Index n);  // (0, 0, 1, -4, 1, 1, 1)
Matrix small2x2_matrix();

Problem make_linear_problem(LinearOperator a, Vector b, std::string label);

// ---- Bratu ------------------------------------------------------------------

/// Five-point stencil (-4 centre, +1 neighbours, zero Dirichlet boundary) on a
/// grid x grid interior mesh, applied matrix-free. No 1/h^2 factor.
Vector apply_laplacian_2d(Index grid, const Vector& x);

// ---- delay NEP ----------------------------------------------------------------

struct DelayNepData {
  Eigen::Matrix3d a0;
  Eigen::Matrix3d a1;
  Eigen::Matrix3d fmat;  // integer kernel matrix K;  F(s) = K * w(s)
  double tau = 1.0;
  Index quad_nodes = 32;
  Eigen::Vector3d normalization = Eigen::Vector3d::Ones();
  // Scalar weight w(s); defaults to (exp((s + 1/2)^2) - exp(1/4)) / 10.
  std::function<double(double)> weight;
};

DelayNepData default_delay_nep_data(double tau = 1.0, Index quad_nodes = 32);

/// Gauss-Legendre nodes and weights on [a, b] (Golub-Welsch).
std::pair<Vector, Vector> gauss_legendre(Index nodes, double a, double b);

/// M(lambda) = -lambda I + A0 + A1 exp(-lambda tau) + int_{-tau}^0 F(s) exp(lambda s) ds.
Eigen::Matrix3d nep_matrix(const DelayNepData& data, double lambda);

// ---- Matrix Market ------------------------------------------------------------

struct MatrixMarketInfo {
  Index rows = 0;
  Index cols = 0;
  Index stored_entries = 0;
  Index nonzeros = 0;  // after symmetric expansion
  bool symmetric = false;
  std::string field;
  std::string symmetry;
};

struct MatrixMarketMatrix {
  Eigen::SparseMatrix<double> matrix;
  MatrixMarketInfo info;
};

MatrixMarketMatrix read_matrix_market(const std::filesystem::path& path);
MatrixMarketMatrix parse_matrix_market(std::istream& in);
LinearOperator load_matrix_market(const std::filesystem::path& path);

}  // namespace accelkit
