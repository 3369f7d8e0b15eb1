#pragma once

// Experiment harness behind the accel_kit CLI: JSON run configurations,
// (parallel) method sweeps, bit-stable CSV traces and text summaries.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "accelkit/accel.hpp"
#include "accelkit/problems.hpp"

namespace accelkit {

/// One entry of the "methods" array. Krylov references (gmres, orthomin, cr,
/// minres) are only valid on linear problems.
struct MethodSpec {
  enum class Family { Accelerator, Gmres, Orthomin, Cr, Minres };

  Family family = Family::Accelerator;
  Method method = Method::Anderson;
  int depth = 1;  // SolveOptions::kUntruncated for "inf"
  double beta = 1.0;
  ResidualMode residual_mode = ResidualMode::Control;

  std::string id() const;       // "anderson", "gmres", ...
  std::string depth_text() const;  // "1", "inf", ...
  std::string label() const;    // "anderson(1)", "crop(inf)", "gmres"
};

struct InitialGuess {
  enum class Kind { Zeros, Ones, Explicit, Random };
  Kind kind = Kind::Zeros;
  Vector values;  // Explicit
  std::optional<std::uint64_t> seed;
  double low = -0.5;
  double high = 0.5;

  Vector materialize(Index n) const;
};

struct ExperimentConfig {
  ProblemSpec problem;
  std::vector<MethodSpec> methods;
  double tol = 1e-10;
  int maxit = 100;
  InitialGuess x0;
  std::optional<std::filesystem::path> output;
  bool trace_real_residuals = true;
  int angle_samples = 64;           // rfactor-sweep
  std::uint64_t sweep_seed = 42;    // rfactor-sweep
};

/// Throws Error(ConfigError) on schema violations. Relative file paths in the
/// document are resolved against base_dir.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);  // IoError if unreadable

/// Overrides the seed of a random x0 and of the angle sweep.
void apply_seed(ExperimentConfig& config, std::uint64_t seed);

struct CsvTraceRow {
  std::string method;
  std::string m;
  double beta = 1.0;
  int k = 0;
  double control_res_norm = 0.0;
  std::optional<double> real_res_norm;
  std::string status;
};

inline constexpr std::string_view kCsvHeader = "method,m,beta,k,control_res_norm,real_res_norm,status";

struct MethodRun {
  MethodSpec spec;
  std::string status;  // SolveStatus / KrylovStatus name
  bool converged = false;
  int iterations = 0;
  double final_real_residual = 0.0;
  std::optional<ConvergenceDiagnostics> diagnostics;
  std::vector<CsvTraceRow> rows;
  std::vector<MixingCoefficients<double>> coefficients;  // accelerators only
};

struct ExperimentResult {
  std::vector<MethodRun> runs;  // config order
};

/// Runs every method of the config, at most max_threads at a time
/// (0 = thread_cap()). Results are assembled in config order.
ExperimentResult run_experiment(const ExperimentConfig& config, unsigned max_threads = 0);

MethodRun run_method(const Problem& problem, const MethodSpec& spec, const Vector& x0, const ExperimentConfig& config);

/// ACCEL_KIT_THREADS if set and positive, otherwise hardware concurrency.
unsigned thread_cap();

std::string format_double(double v);  // %.16e
std::string format_beta(double v);    // shortest round-trip
void write_csv(std::ostream& out, const ExperimentResult& result);
void write_csv_header(std::ostream& out);
std::string summary_text(const ExperimentResult& result);

struct RankingRow {
  std::string label;
  std::string outcome;  // "converged@9", "breakdown@2", ...
  bool converged = false;
  int iterations = 0;
  double final_real_residual = 0.0;
};

/// Converged runs first, then by iterations, then by final real residual;
/// ties keep config order.
std::vector<RankingRow> rank_runs(const ExperimentResult& result);
std::string ranking_text(const std::vector<RankingRow>& ranking);

struct SweepRow {
  int sample = 0;
  double angle = 0.0;
  std::string method;
  double r_factor = 0.0;
};

struct GammaRow {
  std::string method;
  int sample = 0;
  int k = 0;
  double gamma = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<GammaRow> gammas;  // Anderson(1) and CROP(1) only
};

/// r-factor of every configured method from angle_samples random starts on
/// the 2x2 system; x0 components uniform in [x0.low, x0.high].
SweepResult rfactor_sweep(const ExperimentConfig& config);
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
void write_gamma_csv(std::ostream& out, const SweepResult& sweep);

}  // namespace accelkit
