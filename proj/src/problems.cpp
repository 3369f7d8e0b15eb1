#include "accelkit/problems.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <memory>
#include <numbers>

namespace accelkit {

LinearOperator make_dense_operator(Matrix a, std::string description) {
  const Index n = a.rows();
  auto shared = std::make_shared<const Matrix>(std::move(a));
  return {n, [shared](const Vector& v) -> Vector { return *shared * v; }, std::move(description)};
}

LinearOperator make_sparse_operator(Eigen::SparseMatrix<double> a, std::string description) {
  const Index n = a.rows();
  auto shared = std::make_shared<const Eigen::SparseMatrix<double>>(std::move(a));
  return {n, [shared](const Vector& v) -> Vector { return *shared * v; }, std::move(description)};
}

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::LinearTridiag: return "linear_tridiag";
    case ProblemKind::LinearSevendiag: return "linear_sevendiag";
    case ProblemKind::LinearSmall2x2: return "linear_small2x2";
    case ProblemKind::LinearCustom: return "linear_custom";
    case ProblemKind::DominantLinear: return "dominant_linear";
    case ProblemKind::SmallNonlinear: return "small_nonlinear";
    case ProblemKind::Bratu: return "bratu";
    case ProblemKind::DelayNep: return "delay_nep";
  }
  return "unknown";
}

ProblemKind problem_kind_from_string(const std::string& id) {
  for (auto kind : {ProblemKind::LinearTridiag, ProblemKind::LinearSevendiag, ProblemKind::LinearSmall2x2,
                    ProblemKind::LinearCustom, ProblemKind::DominantLinear, ProblemKind::SmallNonlinear,
                    ProblemKind::Bratu, ProblemKind::DelayNep}) {
    if (to_string(kind) == id) return kind;
  }
  throw Error(ErrorCode::InvalidSpec, "unknown problem id '" + id + "'");
}

Eigen::SparseMatrix<double> banded_toeplitz(Index n, const std::vector<double>& bands) {
  const Index half = static_cast<Index>(bands.size()) / 2;
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(n) * bands.size());
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < static_cast<Index>(bands.size()); ++k) {
      const Index j = i + (k - half);
      const double v = bands[static_cast<std::size_t>(k)];
      if (j >= 0 && j < n && v != 0.0) entries.emplace_back(i, j, v);
    }
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

Eigen::SparseMatrix<double> tridiag_matrix(Index n) { return banded_toeplitz(n, {1.0, -4.0, 1.0}); }

Eigen::SparseMatrix<double> sevendiag_matrix(Index n) {
  return banded_toeplitz(n, {0.0, 0.0, 1.0, -4.0, 1.0, 1.0, 1.0});
}

Matrix small2x2_matrix() {
  Matrix a(2, 2);
  a << 1.0 / 3.0, -0.25, 0.0, 2.0 / 3.0;
  return a;
}

Problem make_linear_problem(LinearOperator a, Vector b, std::string label) {
  if (b.size() != a.dimension) throw Error(ErrorCode::DimensionMismatch, "rhs length != operator dimension");
  Problem p;
  p.dimension = a.dimension;
  p.label = std::move(label);
  auto op = a.apply;
  auto rhs = std::make_shared<const Vector>(b);
  p.residual = [op, rhs](const Vector& x) -> Vector { return *rhs - op(x); };
  p.map = [op, rhs](const Vector& x) -> Vector { return x + (*rhs - op(x)); };
  p.linear = LinearSystem{std::move(a), std::move(b)};
  return p;
}

namespace {

Vector unit_vector(Index n, Index i) {
  Vector e = Vector::Zero(n);
  e(i) = 1.0;
  return e;
}

void require_positive(Index value, const char* what) {
  if (value <= 0) throw Error(ErrorCode::InvalidSpec, std::string(what) + " must be positive");
}

Problem dominant_linear(Index n, double mu) {
  auto a = std::make_shared<const Eigen::SparseMatrix<double>>(tridiag_matrix(n));
  const Vector b = unit_vector(n, 0);
  const double scale = mu / static_cast<double>(n);
  Problem p;
  p.dimension = n;
  p.label = "dominant_linear(n=" + std::to_string(n) + ")";
  // f(x) = A x + (mu ||x||^2 / n) x - b, sign kept exactly as stated for this example
  p.residual = [a, b, scale](const Vector& x) -> Vector {
    return *a * x + (scale * x.squaredNorm()) * x - b;
  };
  p.map = [res = p.residual](const Vector& x) -> Vector { return x + res(x); };
  return p;
}

Problem small_nonlinear() {
  Problem p;
  p.dimension = 2;
  p.label = "small_nonlinear";
  p.map = [](const Vector& x) -> Vector {
    Vector g(2);
    g(0) = 0.5 * (x(0) + x(0) * x(0) + x(1) * x(1));
    g(1) = 0.5 * (x(1) + x(0) * x(0));
    return g;
  };
  p.residual = [g = p.map](const Vector& x) -> Vector { return g(x) - x; };
  p.exact_solution = Vector::Zero(2);
  return p;
}

Problem bratu(Index grid, double lambda) {
  const double h = 1.0 / static_cast<double>(grid + 1);
  const double source = h * h * lambda;
  Problem p;
  p.dimension = grid * grid;
  p.label = "bratu(grid=" + std::to_string(grid) + ")";
  p.residual = [grid, source](const Vector& x) -> Vector {
    return apply_laplacian_2d(grid, x) + source * x.array().exp().matrix();
  };
  p.map = [res = p.residual](const Vector& x) -> Vector { return x + res(x); };
  return p;
}

Problem delay_nep(const ProblemSpec& spec) {
  if (!(spec.beta > 0.0)) throw Error(ErrorCode::InvalidSpec, "delay_nep beta must be positive");
  if (!(spec.tau > 0.0)) throw Error(ErrorCode::InvalidSpec, "delay_nep tau must be positive");
  if (spec.quad_nodes < 8) throw Error(ErrorCode::InvalidSpec, "delay_nep needs at least 8 quadrature nodes");
  auto data = std::make_shared<const DelayNepData>(default_delay_nep_data(spec.tau, spec.quad_nodes));
  const double beta = spec.beta;
  Problem p;
  p.dimension = 4;
  p.label = "delay_nep(beta=" + std::to_string(beta) + ")";
  // x = [v; lambda]; the damping is folded in so that g - x = f still holds
  p.residual = [data, beta](const Vector& x) -> Vector {
    const Eigen::Vector3d v = x.head<3>();
    Vector f(4);
    f.head<3>() = nep_matrix(*data, x(3)) * v;
    f(3) = data->normalization.dot(v) - 1.0;
    return beta * f;
  };
  p.map = [res = p.residual](const Vector& x) -> Vector { return x + res(x); };
  return p;
}

}  // namespace

Problem build_problem(const ProblemSpec& spec) {
  switch (spec.kind) {
    case ProblemKind::LinearTridiag:
      require_positive(spec.n, "n");
      return make_linear_problem(make_sparse_operator(tridiag_matrix(spec.n), "tridiag(1,-4,1)"),
                                 unit_vector(spec.n, 0), "linear_tridiag(n=" + std::to_string(spec.n) + ")");
    case ProblemKind::LinearSevendiag:
      require_positive(spec.n, "n");
      return make_linear_problem(make_sparse_operator(sevendiag_matrix(spec.n), "sevendiag(0,0,1,-4,1,1,1)"),
                                 unit_vector(spec.n, 0), "linear_sevendiag(n=" + std::to_string(spec.n) + ")");
    case ProblemKind::LinearSmall2x2: {
      Problem p = make_linear_problem(make_dense_operator(small2x2_matrix(), "small2x2"), Vector::Zero(2),
                                      "linear_small2x2");
      p.exact_solution = Vector::Zero(2);
      return p;
    }
    case ProblemKind::LinearCustom: {
      LinearOperator a;
      if (spec.matrix) {
        if (spec.matrix->rows() != spec.matrix->cols() || spec.matrix->rows() == 0) {
          throw Error(ErrorCode::InvalidSpec, "linear_custom matrix must be square and nonempty");
        }
        a = make_dense_operator(*spec.matrix, "custom dense");
      } else if (spec.matrix_path) {
        a = load_matrix_market(*spec.matrix_path);
      } else {
        throw Error(ErrorCode::InvalidSpec, "linear_custom needs a matrix or a Matrix Market path");
      }
      Vector b = spec.rhs ? *spec.rhs : unit_vector(a.dimension, 0);
      if (b.size() != a.dimension) throw Error(ErrorCode::InvalidSpec, "linear_custom rhs length mismatch");
      return make_linear_problem(std::move(a), std::move(b), "linear_custom");
    }
    case ProblemKind::DominantLinear:
      require_positive(spec.n, "n");
      return dominant_linear(spec.n, spec.mu);
    case ProblemKind::SmallNonlinear:
      return small_nonlinear();
    case ProblemKind::Bratu:
      require_positive(spec.grid, "grid");
      return bratu(spec.grid, spec.lambda);
    case ProblemKind::DelayNep:
      return delay_nep(spec);
  }
  throw Error(ErrorCode::InvalidSpec, "unhandled problem kind");
}

Vector evaluate_map_damped(const Problem& p, const Vector& x, double beta) {
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidSpec, "beta must be positive");
  if (x.size() != p.dimension) throw Error(ErrorCode::DimensionMismatch, "x length != problem dimension");
  if (beta == 1.0) return p.map(x);
  return x + beta * p.residual(x);
}

Problem damped(const Problem& p, double beta) {
  if (beta == 1.0) return p;
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidSpec, "beta must be positive");
  Problem q = p;
  q.label = p.label + "[beta=" + std::to_string(beta) + "]";
  q.residual = [res = p.residual, beta](const Vector& x) -> Vector { return beta * res(x); };
  q.map = [res = p.residual, beta](const Vector& x) -> Vector { return x + beta * res(x); };
  q.linear.reset();
  return q;
}

Vector apply_laplacian_2d(Index grid, const Vector& x) {
  if (x.size() != grid * grid) throw Error(ErrorCode::DimensionMismatch, "bratu vector length != grid^2");
  Vector y(x.size());
  // column-major over (i, j): index = i + grid * j
  for (Index j = 0; j < grid; ++j) {
    for (Index i = 0; i < grid; ++i) {
      const Index k = i + grid * j;
      double acc = -4.0 * x(k);
      if (i > 0) acc += x(k - 1);
      if (i + 1 < grid) acc += x(k + 1);
      if (j > 0) acc += x(k - grid);
      if (j + 1 < grid) acc += x(k + grid);
      y(k) = acc;
    }
  }
  return y;
}

DelayNepData default_delay_nep_data(double tau, Index quad_nodes) {
  DelayNepData d;
  d.a0 << 25, 28, -5, 18, 3, 3, -23, -14, 35;
  d.a0 /= 10.0;
  d.a1 << 17, 7, -3, -24, -21, -2, 20, 7, 4;
  d.a1 /= 10.0;
  d.fmat << 14, -13, 4, 14, 7, 10, 6, 16, 17;
  d.tau = tau;
  d.quad_nodes = quad_nodes;
  d.normalization = Eigen::Vector3d::Ones();
  d.weight = [](double s) { return (std::exp((s + 0.5) * (s + 0.5)) - std::exp(0.25)) / 10.0; };
  return d;
}

std::pair<Vector, Vector> gauss_legendre(Index nodes, double a, double b) {
  if (nodes < 1) throw Error(ErrorCode::InvalidSpec, "need at least one quadrature node");
  Matrix jacobi = Matrix::Zero(nodes, nodes);
  for (Index k = 1; k < nodes; ++k) {
    const double kk = static_cast<double>(k);
    const double off = kk / std::sqrt(4.0 * kk * kk - 1.0);
    jacobi(k, k - 1) = off;
    jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(jacobi);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  Vector x = half * es.eigenvalues().array() + mid;
  Vector w = (2.0 * half) * es.eigenvectors().row(0).transpose().array().square();
  return {std::move(x), std::move(w)};
}

Eigen::Matrix3d nep_matrix(const DelayNepData& data, double lambda) {
  const auto [nodes, weights] = gauss_legendre(data.quad_nodes, -data.tau, 0.0);
  double integral = 0.0;
  for (Index i = 0; i < nodes.size(); ++i) {
    integral += weights(i) * data.weight(nodes(i)) * std::exp(lambda * nodes(i));
  }
  return -lambda * Eigen::Matrix3d::Identity() + data.a0 + data.a1 * std::exp(-lambda * data.tau) +
         integral * data.fmat;
}

}  // namespace accelkit
