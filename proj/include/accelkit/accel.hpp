#pragma once

// Fixed-point accelerators: plain fixed point, Anderson(m, beta), and the CROP
// family (CROP, CROP-Anderson, rCROP, rCROP-Anderson, adaptive CROP), plus
// the diagnostics computed from their traces.

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "accelkit/la_core.hpp"
#include "accelkit/problems.hpp"

namespace accelkit {

enum class Method { FixedPoint, Anderson, Crop, CropAnderson, RCrop, RCropAnderson, AdaptiveCrop };
enum class ResidualMode { Control, Real, Adaptive };
enum class SolveStatus { Converged, MaxIterations, Breakdown, Stagnation, NumericalFailure };

std::string to_string(Method m);
std::string to_string(ResidualMode m);
std::string to_string(SolveStatus s);
Method method_from_string(const std::string& id);
ResidualMode residual_mode_from_string(const std::string& id);

/// Sliding window over the most recent (iterate, residual) pairs. Holds at
/// most capacity + 1 entries; pushing beyond that evicts the oldest pair.
class HistoryWindow {
 public:
  explicit HistoryWindow(Index capacity);

  void push(Vector x, Vector f);
  void clear();

  Index capacity() const { return capacity_; }
  Index size() const { return static_cast<Index>(x_.size()); }
  bool empty() const { return x_.empty(); }

  const Vector& iterate(Index i) const { return x_[static_cast<std::size_t>(i)]; }
  const Vector& residual(Index i) const { return f_[static_cast<std::size_t>(i)]; }
  const Vector& latest_iterate() const { return x_.back(); }
  const Vector& latest_residual() const { return f_.back(); }

  /// Columns oldest to newest, optionally followed by one extra column.
  Matrix iterate_matrix(const Vector* extra = nullptr) const;
  Matrix residual_matrix(const Vector* extra = nullptr) const;

  /// Copy with room for one more entry and (x, f) appended.
  HistoryWindow with_appended(const Vector& x, const Vector& f) const;

 private:
  Index capacity_;
  std::deque<Vector> x_;
  std::deque<Vector> f_;
};

struct SolveOptions {
  static constexpr int kUntruncated = -1;

  int depth = 1;  // m >= 1, or kUntruncated (treated as depth = maxit)
  double beta = 1.0;
  double tol = 1e-10;
  int maxit = 100;
  ResidualMode residual_mode = ResidualMode::Control;
  int adaptive_period = 5;
  double adaptive_cos_threshold = 0.99;
  double breakdown_rel_tol = 1e-14;
  bool trace_real_residuals = false;
  bool keep_iterates = false;
  LsStrategy ls_strategy = LsStrategy::Auto;
  double rank_tol = kDefaultRankTol;

  int effective_depth() const { return depth == kUntruncated ? maxit : depth; }
  void validate() const;
};

struct StepRecord {
  int k = 0;
  double control_res_norm = 0.0;
  std::optional<double> real_res_norm;
  MixingCoefficients<double> coeffs;  // weights that produced this step's iterate
  std::int64_t wall_nanos = 0;
  bool fallback = false;   // rank guard dropped every column; damped fixed-point step taken
  bool real_mode = false;  // residual carried forward was f(x) rather than the mixed one
  std::optional<double> cos_theta;

  double alpha_last() const { return coeffs.alpha.size() ? coeffs.alpha(coeffs.alpha.size() - 1) : 1.0; }

  // Filled only with SolveOptions::keep_iterates. For Anderson the auxiliary
  // pair is the weighted average (x_bar, f_bar); for CROP the preliminary
  // pair (x_tilde, f_tilde); for CROP-Anderson the CROP pair (x_C, f_C).
  Vector iterate;
  Vector residual;
  Vector aux_iterate;
  Vector aux_residual;
};

struct ConvergenceDiagnostics {
  double q_factor_estimate = 0.0;
  double r_factor_estimate = 0.0;
  std::optional<double> contraction_estimate;
};

struct SolveReport {
  Method method = Method::FixedPoint;
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;
  Vector solution;
  std::vector<StepRecord> trace;
  std::optional<ConvergenceDiagnostics> diagnostics;
  double final_residual_norm = 0.0;       // the norm the stopping test was applied to
  double final_real_residual_norm = 0.0;  // ||f(solution)||_2
  std::int64_t wall_nanos = 0;

  std::vector<double> tracked_norms() const;
  std::vector<MixingCoefficients<double>> coefficient_history() const;
};

struct AndersonStep {
  Vector next_iterate;
  Vector x_bar;
  Vector f_bar;
  MixingCoefficients<double> coeffs;
  bool fallback = false;
};

/// One Anderson update from the window x^(k-m_k..k), f^(k-m_k..k):
/// x_next = x_bar + beta f_bar with alpha solving the constrained LS.
AndersonStep anderson_step(const HistoryWindow& window, double beta, LsStrategy strategy = LsStrategy::Auto,
                           double rank_tol = kDefaultRankTol);

/// x_k + beta f_k - (dX + beta dF) (dF^T dF)^{-1} dF^T f_k, the explicit form of the same update.
Vector anderson_step_explicit(const HistoryWindow& window, double beta);

struct CropStep {
  Vector x_next;
  Vector f_next;
  Vector x_tilde;
  Vector f_tilde;
  MixingCoefficients<double> coeffs;
};

/// x_tilde = x_C + f_C and f_tilde = f(x_tilde) from the newest window entry.
std::pair<Vector, Vector> crop_preliminary(const HistoryWindow& window, const Problem& problem);

/// Optimisation half of a CROP step given the preliminary pair.
CropStep crop_combine(const HistoryWindow& window, Vector x_tilde, Vector f_tilde, const Problem& problem,
                      ResidualMode mode, LsStrategy strategy = LsStrategy::Auto,
                      double rank_tol = kDefaultRankTol);

CropStep crop_step(const HistoryWindow& window, const Problem& problem, ResidualMode mode,
                   LsStrategy strategy = LsStrategy::Auto, double rank_tol = kDefaultRankTol);

/// x_tilde - dX (dF^T dF)^{-1} dF^T f_tilde over [window, tilde].
Vector crop_step_explicit(const HistoryWindow& window, const Vector& x_tilde, const Vector& f_tilde);

SolveReport solve(const Problem& problem, Method method, const Vector& x0, const SolveOptions& options);

double cos_theta(const Vector& control_res, const Vector& real_res);

enum class JacobianFlavor { Anderson, Crop };

/// Implicit multisecant inverse-Jacobian approximation of the window:
///   Anderson:  G = -beta I + (dX + beta dF) (dF^T dF)^{-1} dF^T
///   CROP:      G = dX (dF^T dF)^{-1} dF^T
/// For CROP the window is expected to end with the preliminary pair.
Matrix approx_inverse_jacobian(const HistoryWindow& window, JacobianFlavor flavor, double beta = 1.0);

ConvergenceDiagnostics estimate_convergence_factors(std::span<const double> residual_norms);

/// Sum_j |s_j^(k)| for k = 0..K where x_C^(k) = sum_j s_j^(k) x_tilde^(j); entry i
/// of the history is the CROP coefficient vector of step i + 1.
std::vector<double> assumption_m_estimate(std::span<const MixingCoefficients<double>> coefficient_history);

}  // namespace accelkit
