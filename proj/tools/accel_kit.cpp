// accel_kit: run fixed-point accelerator experiments from JSON configs.
//
//   accel_kit solve         --config run.json [--output trace.csv] [--seed N] [--quiet]
//   accel_kit compare       --config sweep.json ...
//   accel_kit rfactor-sweep --config sweep.json ...
//   accel_kit mm-info       matrix.mtx
//
// Exit codes: 0 success, 1 solver non-convergence, 2 config error, 3 I/O error.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "accelkit/bench.hpp"

namespace {

using namespace accelkit;

constexpr int kExitOk = 0;
constexpr int kExitNoConvergence = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct CommonFlags {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "JSON run configuration")->required();
  cmd->add_option("--output", flags.output, "CSV output path (overrides the config)");
  cmd->add_option("--seed", flags.seed, "seed for random x0 / sweep angles");
  cmd->add_flag("--quiet", flags.quiet, "suppress the summary on stdout");
}

ExperimentConfig load(const CommonFlags& flags) {
  ExperimentConfig cfg = load_config(flags.config);
  if (flags.seed) apply_seed(cfg, *flags.seed);
  if (!flags.output.empty()) cfg.output = flags.output;
  return cfg;
}

// Writes via `emit` to the configured output file, or stdout when none is set.
template <typename Emit>
void write_output(const std::optional<std::filesystem::path>& path, Emit&& emit) {
  if (!path) {
    emit(std::cout);
    return;
  }
  std::ofstream out(*path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path->string() + "'");
  emit(out);
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path->string() + "'");
}

// With no output file the CSV owns stdout, so the summary goes to stderr.
std::ostream& summary_stream(const ExperimentConfig& cfg) { return cfg.output ? std::cout : std::cerr; }

int run_solve(const CommonFlags& flags) {
  const ExperimentConfig cfg = load(flags);
  if (cfg.methods.size() != 1) {
    write_output(cfg.output, [](std::ostream& os) { write_csv_header(os); });
    throw Error(ErrorCode::ConfigError, "solve takes exactly one method, config has " +
                                            std::to_string(cfg.methods.size()));
  }
  const ExperimentResult result = run_experiment(cfg);
  write_output(cfg.output, [&](std::ostream& os) { write_csv(os, result); });
  if (!flags.quiet) summary_stream(cfg) << summary_text(result);
  return result.runs.front().converged ? kExitOk : kExitNoConvergence;
}

int run_compare(const CommonFlags& flags) {
  const ExperimentConfig cfg = load(flags);
  if (cfg.methods.size() < 2) {
    write_output(cfg.output, [](std::ostream& os) { write_csv_header(os); });
    throw Error(ErrorCode::ConfigError, "compare needs at least two methods");
  }
  const ExperimentResult result = run_experiment(cfg);
  write_output(cfg.output, [&](std::ostream& os) { write_csv(os, result); });
  const auto ranking = rank_runs(result);
  if (!flags.quiet) summary_stream(cfg) << summary_text(result) << '\n' << ranking_text(ranking);
  return ranking.front().converged ? kExitOk : kExitNoConvergence;
}

int run_sweep(const CommonFlags& flags) {
  const ExperimentConfig cfg = load(flags);
  const SweepResult sweep = rfactor_sweep(cfg);
  write_output(cfg.output, [&](std::ostream& os) { write_sweep_csv(os, sweep); });
  if (cfg.output) {
    auto gamma_path = *cfg.output;
    gamma_path.replace_extension(".gamma.csv");
    write_output(gamma_path, [&](std::ostream& os) { write_gamma_csv(os, sweep); });
  }
  if (!flags.quiet) {
    std::ostream& os = summary_stream(cfg);
    os << "samples: " << cfg.angle_samples << ", rows: " << sweep.rows.size()
       << ", gamma rows: " << sweep.gammas.size() << '\n';
  }
  return kExitOk;
}

int run_mm_info(const std::string& path, bool quiet) {
  const auto mm = read_matrix_market(path);
  if (!quiet) {
    std::cout << "rows: " << mm.info.rows << "\ncols: " << mm.info.cols << "\nstored_entries: " << mm.info.stored_entries
              << "\nnonzeros: " << mm.info.nonzeros << "\nfield: " << mm.info.field
              << "\nsymmetry: " << mm.info.symmetry << '\n';
  }
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::ParseError:
    case ErrorCode::UnsupportedFormat:
      return kExitIo;
    default:
      return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anderson / CROP fixed-point acceleration experiments"};
  app.require_subcommand(1);

  CommonFlags solve_flags, compare_flags, sweep_flags;
  auto* solve_cmd = app.add_subcommand("solve", "run a single method and write its residual trace");
  add_common(solve_cmd, solve_flags);
  auto* compare_cmd = app.add_subcommand("compare", "run several methods and rank them");
  add_common(compare_cmd, compare_flags);
  auto* sweep_cmd = app.add_subcommand("rfactor-sweep", "r-factors over random starts on the 2x2 system");
  add_common(sweep_cmd, sweep_flags);

  std::string mm_path;
  bool mm_quiet = false;
  auto* mm_cmd = app.add_subcommand("mm-info", "inspect a Matrix Market file");
  mm_cmd->add_option("path", mm_path, "Matrix Market file")->required();
  mm_cmd->add_flag("--quiet", mm_quiet, "only validate, print nothing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*solve_cmd) return run_solve(solve_flags);
    if (*compare_cmd) return run_compare(compare_flags);
    if (*sweep_cmd) return run_sweep(sweep_flags);
    if (*mm_cmd) return run_mm_info(mm_path, mm_quiet);
  } catch (const Error& e) {
    std::cerr << "accel_kit: " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "accel_kit: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
