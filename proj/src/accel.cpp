#include "accelkit/accel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace accelkit {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t nanos_since(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

// Consecutive relative changes below this for kStagnationRun steps => stagnation.
constexpr double kStagnationRelChange = 1e-15;
constexpr int kStagnationRun = 5;

bool stagnated(const std::vector<StepRecord>& trace, bool use_control) {
  if (static_cast<int>(trace.size()) <= kStagnationRun) return false;
  auto norm = [&](const StepRecord& r) {
    return use_control || !r.real_res_norm ? r.control_res_norm : *r.real_res_norm;
  };
  for (std::size_t i = trace.size() - kStagnationRun; i < trace.size(); ++i) {
    const double prev = norm(trace[i - 1]);
    const double cur = norm(trace[i]);
    if (!(std::abs(cur - prev) <= kStagnationRelChange * prev)) return false;
  }
  return true;
}

// Power iteration on I - A (the fixed-point map's Jacobian for linear problems).
std::optional<double> linear_contraction(const Problem& problem) {
  if (!problem.linear) return std::nullopt;
  const auto& a = problem.linear->a;
  Vector v(a.dimension);
  for (Index i = 0; i < v.size(); ++i) v(i) = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i));
  v.normalize();
  double rho = 0.0;
  for (int it = 0; it < 50; ++it) {
    Vector w = v - a(v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    rho = nw;
    v = w / nw;
  }
  return rho;
}

void finish(SolveReport& report, const Problem& problem, Clock::time_point t0) {
  report.final_real_residual_norm = problem.f(report.solution).norm();
  std::vector<double> norms = report.tracked_norms();
  // The r-factor needs a positive starting norm; an already-converged x0 has none.
  if (norms.size() >= 2 && norms.front() > 0.0) {
    report.diagnostics = estimate_convergence_factors(norms);
    report.diagnostics->contraction_estimate = linear_contraction(problem);
  }
  report.wall_nanos = nanos_since(t0);
}

StepRecord make_record(int k, double control, std::optional<double> real) {
  StepRecord r;
  r.k = k;
  r.control_res_norm = control;
  r.real_res_norm = real;
  r.coeffs.alpha = Vector::Ones(1);
  r.coeffs.gamma = Vector(0);
  return r;
}

SolveReport fixed_point_or_anderson(const Problem& problem, Method method, const Vector& x0,
                                    const SolveOptions& opt) {
  const auto t0 = Clock::now();
  SolveReport report;
  report.method = method;
  const Index depth = method == Method::FixedPoint ? 0 : opt.effective_depth();
  HistoryWindow window(depth);

  Vector x = x0;
  Vector f = problem.f(x);
  window.push(x, f);
  report.trace.push_back(make_record(0, f.norm(), f.norm()));
  if (opt.keep_iterates) {
    report.trace.back().iterate = x;
    report.trace.back().residual = f;
  }
  report.solution = x;
  report.final_residual_norm = f.norm();

  if (!f.allFinite()) {
    report.status = SolveStatus::NumericalFailure;
  } else if (f.norm() < opt.tol) {
    report.status = SolveStatus::Converged;
  } else {
    report.status = SolveStatus::MaxIterations;
    for (int k = 0; k < opt.maxit; ++k) {
      const auto ts = Clock::now();
      AndersonStep step;
      try {
        step = anderson_step(window, opt.beta, opt.ls_strategy, opt.rank_tol);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteInput) throw;
        report.status = SolveStatus::NumericalFailure;
        break;
      }
      StepRecord& cur = report.trace.back();
      cur.coeffs = step.coeffs;
      cur.fallback = step.fallback;
      if (opt.keep_iterates) {
        cur.aux_iterate = step.x_bar;
        cur.aux_residual = step.f_bar;
      }

      x = std::move(step.next_iterate);
      f = problem.f(x);
      const double fn = f.norm();
      window.push(x, f);
      report.trace.push_back(make_record(k + 1, fn, fn));
      report.trace.back().wall_nanos = nanos_since(ts);
      if (opt.keep_iterates) {
        report.trace.back().iterate = x;
        report.trace.back().residual = f;
      }
      report.solution = x;
      report.final_residual_norm = fn;
      report.iterations = k + 1;

      if (!std::isfinite(fn)) {
        report.status = SolveStatus::NumericalFailure;
        break;
      }
      if (fn < opt.tol) {
        report.status = SolveStatus::Converged;
        break;
      }
      if (stagnated(report.trace, true)) {
        report.status = SolveStatus::Stagnation;
        break;
      }
    }
  }
  finish(report, problem, t0);
  return report;
}

SolveReport crop_family(const Problem& problem, Method method, const Vector& x0, const SolveOptions& opt) {
  const auto t0 = Clock::now();
  SolveReport report;
  report.method = method;

  const bool anderson_variant = method == Method::CropAnderson || method == Method::RCropAnderson;
  ResidualMode mode = opt.residual_mode;
  if (method == Method::RCrop || method == Method::RCropAnderson) mode = ResidualMode::Real;
  if (method == Method::AdaptiveCrop) mode = ResidualMode::Adaptive;
  bool real_mode = mode == ResidualMode::Real;

  // CROP(m) keeps m - 1 stored pairs; the preliminary pair is the m-th column.
  HistoryWindow window(opt.effective_depth() - 1);

  Vector x = x0;
  Vector f = problem.f(x);
  const double f0 = f.norm();
  window.push(x, f);
  report.trace.push_back(make_record(0, f0, f0));
  report.trace.back().real_mode = real_mode;
  if (opt.keep_iterates) {
    auto& r = report.trace.back();
    r.iterate = r.aux_iterate = x;
    r.residual = r.aux_residual = f;
  }
  report.solution = x;
  report.final_residual_norm = f0;

  if (!f.allFinite()) {
    report.status = SolveStatus::NumericalFailure;
    finish(report, problem, t0);
    return report;
  }
  if (f0 < opt.tol) {
    report.status = SolveStatus::Converged;
    finish(report, problem, t0);
    return report;
  }

  report.status = SolveStatus::MaxIterations;
  for (int k = 0; k < opt.maxit; ++k) {
    const auto ts = Clock::now();
    auto [x_tilde, f_tilde] = crop_preliminary(window, problem);
    const double ft = f_tilde.norm();

    if (anderson_variant) {
      report.trace.push_back(make_record(k + 1, ft, ft));
      auto& r = report.trace.back();
      r.real_mode = real_mode;
      if (opt.keep_iterates) {
        r.iterate = x_tilde;
        r.residual = f_tilde;
      }
      report.solution = x_tilde;
      report.final_residual_norm = ft;
      report.iterations = k + 1;
      if (!std::isfinite(ft)) {
        report.status = SolveStatus::NumericalFailure;
        break;
      }
      if (ft < opt.tol) {
        report.status = SolveStatus::Converged;
        r.wall_nanos = nanos_since(ts);
        break;
      }
    } else if (!f_tilde.allFinite()) {
      report.trace.push_back(make_record(k + 1, ft, ft));
      report.iterations = k + 1;
      report.final_residual_norm = ft;
      report.status = SolveStatus::NumericalFailure;
      break;
    }

    CropStep step;
    try {
      step = crop_combine(window, x_tilde, f_tilde, problem,
                          real_mode ? ResidualMode::Real : ResidualMode::Control, opt.ls_strategy, opt.rank_tol);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteInput) throw;
      report.status = SolveStatus::NumericalFailure;
      break;
    }

    std::optional<double> cos;
    std::optional<double> real_norm;
    if (real_mode) {
      real_norm = step.f_next.norm();
    } else if (mode == ResidualMode::Adaptive && (k + 1) % opt.adaptive_period == 0) {
      Vector real = problem.f(step.x_next);
      real_norm = real.norm();
      if (real.allFinite() && real_norm > 0.0 && step.f_next.norm() > 0.0) {
        cos = cos_theta(step.f_next, real);
        if (*cos <= opt.adaptive_cos_threshold) {
          real_mode = true;
          step.f_next = std::move(real);
        }
      }
    }
    const double fc = step.f_next.norm();
    window.push(step.x_next, step.f_next);

    if (anderson_variant) {
      auto& r = report.trace.back();
      r.coeffs = step.coeffs;
      r.cos_theta = cos;
      r.real_mode = real_mode;
      if (opt.keep_iterates) {
        r.aux_iterate = step.x_next;
        r.aux_residual = step.f_next;
      }
      r.wall_nanos = nanos_since(ts);
      if (!std::isfinite(fc)) {
        report.status = SolveStatus::NumericalFailure;
        break;
      }
      if (stagnated(report.trace, true)) {
        report.status = SolveStatus::Stagnation;
        break;
      }
      continue;
    }

    if (!real_norm && opt.trace_real_residuals) real_norm = problem.f(step.x_next).norm();
    report.trace.push_back(make_record(k + 1, fc, real_norm));
    auto& r = report.trace.back();
    r.coeffs = step.coeffs;
    r.cos_theta = cos;
    r.real_mode = real_mode;
    if (opt.keep_iterates) {
      r.iterate = step.x_next;
      r.residual = step.f_next;
      r.aux_iterate = std::move(step.x_tilde);
      r.aux_residual = std::move(step.f_tilde);
    }
    report.solution = step.x_next;
    report.final_residual_norm = fc;
    report.iterations = k + 1;
    r.wall_nanos = nanos_since(ts);

    if (!std::isfinite(fc)) {
      report.status = SolveStatus::NumericalFailure;
      break;
    }
    if (!real_mode && fc < opt.breakdown_rel_tol * f0) {
      if (!real_norm) real_norm = problem.f(step.x_next).norm();
      r.real_res_norm = real_norm;
      if (*real_norm >= opt.tol) {
        // The recurrence has lost track of the true residual: report it.
        report.status = SolveStatus::Breakdown;
        report.final_residual_norm = *real_norm;
        break;
      }
    }
    if (fc < opt.tol) {
      report.status = SolveStatus::Converged;
      break;
    }
    if (stagnated(report.trace, !real_mode)) {
      report.status = SolveStatus::Stagnation;
      break;
    }
  }
  finish(report, problem, t0);
  return report;
}

Matrix multisecant_projector(const Matrix& df) {
  if (df.cols() == 0) throw Error(ErrorCode::SingularWindow, "window needs at least two entries");
  const auto qr = qr_factor(df);
  if (qr.numerical_rank < df.cols()) throw Error(ErrorCode::SingularWindow, "difference columns are rank deficient");
  // (dF^T dF)^{-1} dF^T via the QR factors: P R^{-1} Q^T
  const Matrix rinv_qt = qr.r.triangularView<Eigen::Upper>().solve(qr.q.transpose());
  return qr.col_perm * rinv_qt;
}

}  // namespace

// ---- names -------------------------------------------------------------------

std::string to_string(Method m) {
  switch (m) {
    case Method::FixedPoint: return "fixed_point";
    case Method::Anderson: return "anderson";
    case Method::Crop: return "crop";
    case Method::CropAnderson: return "crop_anderson";
    case Method::RCrop: return "rcrop";
    case Method::RCropAnderson: return "rcrop_anderson";
    case Method::AdaptiveCrop: return "adaptive_crop";
  }
  return "unknown";
}

std::string to_string(ResidualMode m) {
  switch (m) {
    case ResidualMode::Control: return "control";
    case ResidualMode::Real: return "real";
    case ResidualMode::Adaptive: return "adaptive";
  }
  return "unknown";
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::Breakdown: return "breakdown";
    case SolveStatus::Stagnation: return "stagnation";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

Method method_from_string(const std::string& id) {
  for (Method m : {Method::FixedPoint, Method::Anderson, Method::Crop, Method::CropAnderson, Method::RCrop,
                   Method::RCropAnderson, Method::AdaptiveCrop}) {
    if (to_string(m) == id) return m;
  }
  throw Error(ErrorCode::InvalidSpec, "unknown method '" + id + "'");
}

ResidualMode residual_mode_from_string(const std::string& id) {
  for (ResidualMode m : {ResidualMode::Control, ResidualMode::Real, ResidualMode::Adaptive}) {
    if (to_string(m) == id) return m;
  }
  throw Error(ErrorCode::InvalidSpec, "unknown residual mode '" + id + "'");
}

// ---- HistoryWindow -----------------------------------------------------------

HistoryWindow::HistoryWindow(Index capacity) : capacity_(capacity) {
  if (capacity < 0) throw Error(ErrorCode::InvalidSpec, "window capacity must be non-negative");
}

void HistoryWindow::push(Vector x, Vector f) {
  if (x.size() != f.size()) throw Error(ErrorCode::DimensionMismatch, "iterate and residual lengths differ");
  if (!x_.empty() && x.size() != x_.front().size()) {
    throw Error(ErrorCode::DimensionMismatch, "window entries must share one dimension");
  }
  x_.push_back(std::move(x));
  f_.push_back(std::move(f));
  while (static_cast<Index>(x_.size()) > capacity_ + 1) {
    x_.pop_front();
    f_.pop_front();
  }
}

void HistoryWindow::clear() {
  x_.clear();
  f_.clear();
}

namespace {
Matrix stack(const std::deque<Vector>& cols, const Vector* extra) {
  const Index n = cols.empty() ? (extra ? extra->size() : 0) : cols.front().size();
  Matrix m(n, static_cast<Index>(cols.size()) + (extra ? 1 : 0));
  Index j = 0;
  for (const auto& c : cols) m.col(j++) = c;
  if (extra) {
    if (extra->size() != n) throw Error(ErrorCode::DimensionMismatch, "extra column length mismatch");
    m.col(j) = *extra;
  }
  return m;
}
}  // namespace

Matrix HistoryWindow::iterate_matrix(const Vector* extra) const { return stack(x_, extra); }
Matrix HistoryWindow::residual_matrix(const Vector* extra) const { return stack(f_, extra); }

HistoryWindow HistoryWindow::with_appended(const Vector& x, const Vector& f) const {
  HistoryWindow out(std::max(capacity_, size()));
  for (Index i = 0; i < size(); ++i) out.push(iterate(i), residual(i));
  out.push(x, f);
  return out;
}

// ---- options / report --------------------------------------------------------

void SolveOptions::validate() const {
  if (depth != kUntruncated && depth < 1) throw Error(ErrorCode::InvalidSpec, "depth must be >= 1 or untruncated");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw Error(ErrorCode::InvalidSpec, "beta must be positive");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidSpec, "tol must be positive");
  if (maxit < 1) throw Error(ErrorCode::InvalidSpec, "maxit must be >= 1");
  if (adaptive_period < 1) throw Error(ErrorCode::InvalidSpec, "adaptive_period must be >= 1");
  if (!(breakdown_rel_tol >= 0.0)) throw Error(ErrorCode::InvalidSpec, "breakdown_rel_tol must be >= 0");
}

std::vector<double> SolveReport::tracked_norms() const {
  std::vector<double> out;
  out.reserve(trace.size());
  for (const auto& r : trace) out.push_back(r.control_res_norm);
  return out;
}

std::vector<MixingCoefficients<double>> SolveReport::coefficient_history() const {
  std::vector<MixingCoefficients<double>> out;
  for (std::size_t i = 1; i < trace.size(); ++i) out.push_back(trace[i].coeffs);
  return out;
}

// ---- Anderson ------------------------------------------------------------------

AndersonStep anderson_step(const HistoryWindow& window, double beta, LsStrategy strategy, double rank_tol) {
  if (window.empty()) throw Error(ErrorCode::InvalidSpec, "empty history window");
  AndersonStep out;
  const Matrix fm = window.residual_matrix();
  MixingResult<double> mix;
  try {
    mix = solve_mixing(fm, strategy, rank_tol);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularWindow) throw;
    mix.retained_columns = 0;
  }
  if (fm.cols() > 1 && mix.retained_columns == 0) {
    // Every difference column vanished: fall back to a damped fixed-point step.
    out.fallback = true;
    out.coeffs.gamma = Vector::Ones(fm.cols() - 1);
    out.coeffs.alpha = gamma_to_alpha(out.coeffs.gamma);
    out.x_bar = window.latest_iterate();
    out.f_bar = window.latest_residual();
  } else {
    out.coeffs = std::move(mix.coeffs);
    out.x_bar = window.iterate_matrix() * out.coeffs.alpha;
    out.f_bar = std::move(mix.mixed_residual);
  }
  out.next_iterate = out.x_bar + beta * out.f_bar;
  return out;
}

Vector anderson_step_explicit(const HistoryWindow& window, double beta) {
  if (window.empty()) throw Error(ErrorCode::InvalidSpec, "empty history window");
  const Vector& xk = window.latest_iterate();
  const Vector& fk = window.latest_residual();
  if (window.size() == 1) return xk + beta * fk;
  const Matrix dx = difference_columns(window.iterate_matrix());
  const Matrix df = difference_columns(window.residual_matrix());
  return xk + beta * fk - (dx + beta * df) * (multisecant_projector(df) * fk);
}

// ---- CROP -------------------------------------------------------------------------

std::pair<Vector, Vector> crop_preliminary(const HistoryWindow& window, const Problem& problem) {
  if (window.empty()) throw Error(ErrorCode::InvalidSpec, "empty history window");
  Vector x_tilde = window.latest_iterate() + window.latest_residual();
  Vector f_tilde = problem.f(x_tilde);
  return {std::move(x_tilde), std::move(f_tilde)};
}

CropStep crop_combine(const HistoryWindow& window, Vector x_tilde, Vector f_tilde, const Problem& problem,
                      ResidualMode mode, LsStrategy strategy, double rank_tol) {
  if (mode == ResidualMode::Adaptive) {
    throw Error(ErrorCode::InvalidSpec, "crop_combine takes a concrete residual mode");
  }
  CropStep out;
  const Matrix fm = window.residual_matrix(&f_tilde);
  MixingResult<double> mix;
  try {
    mix = solve_mixing(fm, strategy, rank_tol);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularWindow) throw;
    mix = solve_mixing(fm, LsStrategy::Qr, rank_tol);
  }
  out.coeffs = std::move(mix.coeffs);
  out.x_next = window.iterate_matrix(&x_tilde) * out.coeffs.alpha;
  out.f_next = mode == ResidualMode::Real ? problem.f(out.x_next) : std::move(mix.mixed_residual);
  out.x_tilde = std::move(x_tilde);
  out.f_tilde = std::move(f_tilde);
  return out;
}

CropStep crop_step(const HistoryWindow& window, const Problem& problem, ResidualMode mode, LsStrategy strategy,
                   double rank_tol) {
  auto [xt, ft] = crop_preliminary(window, problem);
  return crop_combine(window, std::move(xt), std::move(ft), problem, mode, strategy, rank_tol);
}

Vector crop_step_explicit(const HistoryWindow& window, const Vector& x_tilde, const Vector& f_tilde) {
  if (window.empty()) return x_tilde;
  const Matrix dx = difference_columns(window.iterate_matrix(&x_tilde));
  const Matrix df = difference_columns(window.residual_matrix(&f_tilde));
  return x_tilde - dx * (multisecant_projector(df) * f_tilde);
}

// ---- driver ------------------------------------------------------------------------

SolveReport solve(const Problem& problem, Method method, const Vector& x0, const SolveOptions& options) {
  options.validate();
  if (x0.size() != problem.dimension) {
    throw Error(ErrorCode::DimensionMismatch, "x0 has length " + std::to_string(x0.size()) + ", problem has " +
                                                  std::to_string(problem.dimension));
  }
  detail::require_finite(x0, "x0");

  switch (method) {
    case Method::FixedPoint:
    case Method::Anderson:
      return fixed_point_or_anderson(problem, method, x0, options);
    default:
      break;
  }
  // CROP has no damping parameter of its own; beta != 1 runs it on g_beta.
  if (options.beta != 1.0) return crop_family(damped(problem, options.beta), method, x0, options);
  return crop_family(problem, method, x0, options);
}

// ---- diagnostics ------------------------------------------------------------------

double cos_theta(const Vector& control_res, const Vector& real_res) {
  if (control_res.size() != real_res.size()) throw Error(ErrorCode::DimensionMismatch, "cos_theta length mismatch");
  const double a = control_res.norm();
  const double b = real_res.norm();
  if (a == 0.0 || b == 0.0) throw Error(ErrorCode::ZeroVector, "cos_theta of a zero vector");
  return std::clamp(control_res.dot(real_res) / (a * b), -1.0, 1.0);
}

Matrix approx_inverse_jacobian(const HistoryWindow& window, JacobianFlavor flavor, double beta) {
  if (window.size() < 2) throw Error(ErrorCode::SingularWindow, "window needs at least two entries");
  const Matrix dx = difference_columns(window.iterate_matrix());
  const Matrix df = difference_columns(window.residual_matrix());
  const Matrix p = multisecant_projector(df);
  if (flavor == JacobianFlavor::Crop) return dx * p;
  const Index n = dx.rows();
  return -beta * Matrix::Identity(n, n) + (dx + beta * df) * p;
}

ConvergenceDiagnostics estimate_convergence_factors(std::span<const double> r) {
  if (r.size() < 2) throw Error(ErrorCode::DegenerateTrace, "need at least two residual norms");
  if (!(r.front() > 0.0)) throw Error(ErrorCode::DegenerateTrace, "initial residual norm must be positive");
  ConvergenceDiagnostics d;
  d.q_factor_estimate = 0.0;
  for (std::size_t k = 0; k + 1 < r.size(); ++k) {
    if (r[k] > 0.0) d.q_factor_estimate = std::max(d.q_factor_estimate, r[k + 1] / r[k]);
  }
  d.r_factor_estimate = std::pow(r.back() / r.front(), 1.0 / static_cast<double>(r.size() - 1));
  return d;
}

std::vector<double> assumption_m_estimate(std::span<const MixingCoefficients<double>> history) {
  // s[k] expresses x_C^(k) in the basis x_tilde^(0..k), x_tilde^(0) := x^(0).
  std::vector<Vector> s;
  s.push_back(Vector::Ones(1));
  std::vector<double> out{1.0};
  for (std::size_t i = 0; i < history.size(); ++i) {
    const Index k = static_cast<Index>(i) + 1;  // building s^(k)
    const Vector& alpha = history[i].alpha;
    const Index mk = alpha.size() - 1;          // stored CROP pairs used at this step
    if (mk < 0 || mk > k) throw Error(ErrorCode::DimensionMismatch, "coefficient vector longer than history");
    Vector next = Vector::Zero(k + 1);
    for (Index j = 0; j < mk; ++j) {
      const Vector& prev = s[static_cast<std::size_t>(k - mk + j)];
      next.head(prev.size()) += alpha(j) * prev;
    }
    next(k) += alpha(mk);
    out.push_back(next.cwiseAbs().sum());
    s.push_back(std::move(next));
  }
  return out;
}

}  // namespace accelkit
