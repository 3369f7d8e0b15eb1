#include "accelkit/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "accelkit/krylov_ref.hpp"
#include "accelkit/random.hpp"

namespace accelkit {

using json = nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    config_error("'" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

Index get_size(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    config_error("'" + std::string(key) + "' in " + where + " must be a positive integer");
  }
  return static_cast<Index>(v.get<long long>());
}

Vector parse_vector(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty()) config_error(where + " must be a nonempty array of numbers");
  Vector v(static_cast<Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) config_error(where + " must contain only numbers");
    v(static_cast<Index>(i)) = arr[i].get<double>();
  }
  return v;
}

ProblemSpec parse_problem(const json& p, const std::filesystem::path& base_dir) {
  if (!p.is_object()) config_error("'problem' must be an object");
  reject_unknown_keys(p, {"id", "n", "mu", "grid", "lambda", "beta", "tau", "quad_nodes", "matrix", "matrix_market", "rhs"},
                      "problem");
  if (!p.contains("id")) config_error("problem.id is required");
  ProblemSpec spec;
  try {
    spec.kind = problem_kind_from_string(get_as<std::string>(p, "id", "problem"));
  } catch (const Error& e) {
    config_error(e.what());
  }
  if (p.contains("n")) spec.n = get_size(p, "n", "problem");
  if (p.contains("grid")) spec.grid = get_size(p, "grid", "problem");
  if (p.contains("quad_nodes")) spec.quad_nodes = get_size(p, "quad_nodes", "problem");
  if (p.contains("mu")) spec.mu = get_as<double>(p, "mu", "problem");
  if (p.contains("lambda")) spec.lambda = get_as<double>(p, "lambda", "problem");
  if (p.contains("beta")) spec.beta = get_as<double>(p, "beta", "problem");
  if (p.contains("tau")) spec.tau = get_as<double>(p, "tau", "problem");
  if (p.contains("matrix")) {
    const auto& rows = p.at("matrix");
    if (!rows.is_array() || rows.empty()) config_error("problem.matrix must be an array of rows");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Vector r = parse_vector(rows[i], "problem.matrix row");
      if (r.size() != m.cols()) config_error("problem.matrix must be square");
      m.row(static_cast<Index>(i)) = r.transpose();
    }
    spec.matrix = std::move(m);
  }
  if (p.contains("matrix_market")) {
    std::filesystem::path path = get_as<std::string>(p, "matrix_market", "problem");
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    spec.matrix_path = path;
  }
  if (p.contains("rhs")) spec.rhs = parse_vector(p.at("rhs"), "problem.rhs");
  return spec;
}

MethodSpec parse_method(const json& m, std::size_t index) {
  const std::string where = "methods[" + std::to_string(index) + "]";
  if (!m.is_object()) config_error(where + " must be an object");
  reject_unknown_keys(m, {"method", "m", "beta", "residual_mode"}, where);
  if (!m.contains("method")) config_error(where + ".method is required");
  const auto id = get_as<std::string>(m, "method", where);

  MethodSpec spec;
  if (id == "gmres") {
    spec.family = MethodSpec::Family::Gmres;
    spec.depth = SolveOptions::kUntruncated;
  } else if (id == "orthomin") {
    spec.family = MethodSpec::Family::Orthomin;
  } else if (id == "cr") {
    spec.family = MethodSpec::Family::Cr;
  } else if (id == "minres") {
    spec.family = MethodSpec::Family::Minres;
  } else {
    try {
      spec.method = method_from_string(id);
    } catch (const Error& e) {
      config_error(where + ": " + e.what());
    }
  }

  if (m.contains("m")) {
    const auto& d = m.at("m");
    if (d.is_string() && (d.get<std::string>() == "inf" || d.get<std::string>() == "maxit")) {
      spec.depth = SolveOptions::kUntruncated;
    } else if (d.is_number_integer() && d.get<long long>() >= 0) {
      spec.depth = static_cast<int>(d.get<long long>());
    } else {
      config_error(where + ".m must be a non-negative integer or \"inf\"");
    }
  }
  if (spec.family == MethodSpec::Family::Accelerator && spec.method != Method::FixedPoint && spec.depth == 0) {
    config_error(where + ".m must be >= 1 for " + id);
  }
  if (spec.family == MethodSpec::Family::Gmres && spec.depth != SolveOptions::kUntruncated) {
    config_error(where + ": gmres is unrestarted, m must be \"inf\"");
  }
  if (m.contains("beta")) {
    spec.beta = get_as<double>(m, "beta", where);
    if (!(spec.beta > 0.0) || !std::isfinite(spec.beta)) config_error(where + ".beta must be positive");
  }
  if (m.contains("residual_mode")) {
    try {
      spec.residual_mode = residual_mode_from_string(get_as<std::string>(m, "residual_mode", where));
    } catch (const Error& e) {
      config_error(where + ": " + e.what());
    }
  }
  return spec;
}

InitialGuess parse_x0(const json& x) {
  InitialGuess g;
  if (x.is_string()) {
    const auto s = x.get<std::string>();
    if (s == "zeros") {
      g.kind = InitialGuess::Kind::Zeros;
    } else if (s == "ones") {
      g.kind = InitialGuess::Kind::Ones;
    } else {
      config_error("x0 must be \"zeros\", \"ones\", an array, or {\"random\": {...}}");
    }
  } else if (x.is_array()) {
    g.kind = InitialGuess::Kind::Explicit;
    g.values = parse_vector(x, "x0");
  } else if (x.is_object()) {
    reject_unknown_keys(x, {"random"}, "x0");
    if (!x.contains("random") || !x.at("random").is_object()) config_error("x0 object must hold a 'random' object");
    const auto& r = x.at("random");
    reject_unknown_keys(r, {"seed", "low", "high"}, "x0.random");
    g.kind = InitialGuess::Kind::Random;
    if (!r.contains("seed")) config_error("x0.random.seed is mandatory");
    if (!r.at("seed").is_number_unsigned()) config_error("x0.random.seed must be a non-negative integer");
    g.seed = r.at("seed").get<std::uint64_t>();
    if (r.contains("low")) g.low = get_as<double>(r, "low", "x0.random");
    if (r.contains("high")) g.high = get_as<double>(r, "high", "x0.random");
    if (!(g.low <= g.high)) config_error("x0.random requires low <= high");
  } else {
    config_error("x0 has an unsupported type");
  }
  return g;
}

std::string status_name(KrylovStatus s) { return to_string(s); }

MethodRun from_krylov(const MethodSpec& spec, const KrylovTrace<double>& t) {
  MethodRun run;
  run.spec = spec;
  run.status = status_name(t.status);
  run.iterations = t.iterations();
  run.converged = t.status == KrylovStatus::Converged;
  run.final_real_residual = t.residual_norms.back();
  if (t.residual_norms.size() >= 2 && t.residual_norms.front() > 0.0) {
    run.diagnostics = estimate_convergence_factors(t.residual_norms);
  }
  for (std::size_t k = 0; k < t.residual_norms.size(); ++k) {
    const bool last = k + 1 == t.residual_norms.size();
    run.rows.push_back({spec.id(), spec.depth_text(), spec.beta, static_cast<int>(k), t.residual_norms[k],
                        t.residual_norms[k], last ? run.status : "iterating"});
  }
  return run;
}

}  // namespace

// ---- specs ---------------------------------------------------------------------

std::string MethodSpec::id() const {
  switch (family) {
    case Family::Gmres: return "gmres";
    case Family::Orthomin: return "orthomin";
    case Family::Cr: return "cr";
    case Family::Minres: return "minres";
    case Family::Accelerator: break;
  }
  return to_string(method);
}

std::string MethodSpec::depth_text() const {
  if (family == Family::Accelerator && method == Method::FixedPoint) return "0";
  if (family == Family::Cr) return "1";
  if (family == Family::Minres) return "0";
  return depth == SolveOptions::kUntruncated ? "inf" : std::to_string(depth);
}

std::string MethodSpec::label() const {
  std::string s = id();
  if (family == Family::Accelerator && method != Method::FixedPoint) s += "(" + depth_text() + ")";
  if (family == Family::Orthomin) s += "(" + depth_text() + ")";
  if (beta != 1.0) s += "[beta=" + format_beta(beta) + "]";
  if (family == Family::Accelerator && method == Method::Crop && residual_mode != ResidualMode::Control) {
    s += "[" + to_string(residual_mode) + "]";
  }
  return s;
}

Vector InitialGuess::materialize(Index n) const {
  switch (kind) {
    case Kind::Zeros: return Vector::Zero(n);
    case Kind::Ones: return Vector::Ones(n);
    case Kind::Explicit:
      if (values.size() != n) {
        config_error("x0 has length " + std::to_string(values.size()) + ", problem dimension is " + std::to_string(n));
      }
      return values;
    case Kind::Random: {
      if (!seed) config_error("random x0 requires a seed");
      CounterRng rng(*seed);
      return rng.uniform_vector(n, low, high);
    }
  }
  return Vector::Zero(n);
}

// ---- config ----------------------------------------------------------------------

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) config_error("config must be a JSON object");
  reject_unknown_keys(doc, {"problem", "methods", "tol", "maxit", "x0", "output", "trace_real_residuals", "sweep"},
                      "config");

  ExperimentConfig cfg;
  if (!doc.contains("problem")) config_error("'problem' is required");
  cfg.problem = parse_problem(doc.at("problem"), base_dir);

  if (doc.contains("methods")) {
    const auto& ms = doc.at("methods");
    if (!ms.is_array()) config_error("'methods' must be an array");
    for (std::size_t i = 0; i < ms.size(); ++i) cfg.methods.push_back(parse_method(ms[i], i));
  }
  if (doc.contains("tol")) {
    cfg.tol = get_as<double>(doc, "tol", "config");
    if (!(cfg.tol > 0.0)) config_error("tol must be positive");
  }
  if (doc.contains("maxit")) {
    const auto& v = doc.at("maxit");
    if (!v.is_number_integer() || v.get<long long>() < 1) config_error("maxit must be a positive integer");
    cfg.maxit = static_cast<int>(v.get<long long>());
  }
  if (doc.contains("x0")) cfg.x0 = parse_x0(doc.at("x0"));
  if (doc.contains("output")) {
    std::filesystem::path out = get_as<std::string>(doc, "output", "config");
    if (out.is_relative() && !base_dir.empty()) out = base_dir / out;
    cfg.output = out;
  }
  if (doc.contains("trace_real_residuals")) {
    cfg.trace_real_residuals = get_as<bool>(doc, "trace_real_residuals", "config");
  }
  if (doc.contains("sweep")) {
    const auto& s = doc.at("sweep");
    if (!s.is_object()) config_error("'sweep' must be an object");
    reject_unknown_keys(s, {"angle_samples", "seed"}, "sweep");
    if (s.contains("angle_samples")) cfg.angle_samples = static_cast<int>(get_size(s, "angle_samples", "sweep"));
    if (s.contains("seed")) {
      if (!s.at("seed").is_number_unsigned()) config_error("sweep.seed must be a non-negative integer");
      cfg.sweep_seed = s.at("seed").get<std::uint64_t>();
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void apply_seed(ExperimentConfig& config, std::uint64_t seed) {
  if (config.x0.kind == InitialGuess::Kind::Random) config.x0.seed = seed;
  config.sweep_seed = seed;
}

// ---- running ------------------------------------------------------------------------

unsigned thread_cap() {
  if (const char* env = std::getenv("ACCEL_KIT_THREADS")) {
    unsigned v = 0;
    const auto* end = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec == std::errc() && ptr == end && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

MethodRun run_method(const Problem& problem, const MethodSpec& spec, const Vector& x0, const ExperimentConfig& config) {
  if (spec.family != MethodSpec::Family::Accelerator) {
    if (!problem.linear) config_error(spec.id() + " needs a linear problem");
    const auto& a = problem.linear->a;
    const Vector& b = problem.linear->b;
    auto apply = [&a](const Vector& v) { return a(v); };
    switch (spec.family) {
      case MethodSpec::Family::Gmres:
        return from_krylov(spec, gmres_solve<double>(apply, b, x0, config.tol, config.maxit));
      case MethodSpec::Family::Orthomin:
        return from_krylov(spec, orthomin_solve<double>(apply, b, x0, spec.depth, config.tol, config.maxit));
      case MethodSpec::Family::Cr:
        return from_krylov(spec, cr_solve<double>(apply, b, x0, config.tol, config.maxit));
      case MethodSpec::Family::Minres:
        return from_krylov(spec, minimal_residual_solve<double>(apply, b, x0, config.tol, config.maxit));
      case MethodSpec::Family::Accelerator:
        break;
    }
  }

  SolveOptions opt;
  opt.depth = spec.depth;
  opt.beta = spec.beta;
  opt.tol = config.tol;
  opt.maxit = config.maxit;
  opt.residual_mode = spec.residual_mode;
  opt.trace_real_residuals = config.trace_real_residuals;
  if (spec.method == Method::FixedPoint) opt.depth = 1;
  const SolveReport report = solve(problem, spec.method, x0, opt);

  MethodRun run;
  run.spec = spec;
  run.status = to_string(report.status);
  run.converged = report.status == SolveStatus::Converged;
  run.iterations = report.iterations;
  run.final_real_residual = report.final_real_residual_norm;
  run.diagnostics = report.diagnostics;
  run.coefficients = report.coefficient_history();
  for (const auto& r : report.trace) {
    const bool last = r.k == report.iterations;
    run.rows.push_back({spec.id(), spec.depth_text(), spec.beta, r.k, r.control_res_norm, r.real_res_norm,
                        last ? run.status : "iterating"});
  }
  return run;
}

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned max_threads) {
  const Problem problem = build_problem(config.problem);
  const Vector x0 = config.x0.materialize(problem.dimension);

  ExperimentResult result;
  result.runs.resize(config.methods.size());
  if (config.methods.empty()) return result;

  const unsigned cap = max_threads ? max_threads : thread_cap();
  const unsigned workers = std::min<unsigned>(cap, static_cast<unsigned>(config.methods.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(config.methods.size());
  auto work = [&] {
    for (std::size_t i = next++; i < config.methods.size(); i = next++) {
      try {
        result.runs[i] = run_method(problem, config.methods[i], x0, config);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return result;
}

// ---- output -----------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string format_beta(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : format_double(v);
}

void write_csv_header(std::ostream& out) { out << kCsvHeader << '\n'; }

void write_csv(std::ostream& out, const ExperimentResult& result) {
  write_csv_header(out);
  for (const auto& run : result.runs) {
    for (const auto& r : run.rows) {
      out << r.method << ',' << r.m << ',' << format_beta(r.beta) << ',' << r.k << ','
          << format_double(r.control_res_norm) << ',' << (r.real_res_norm ? format_double(*r.real_res_norm) : "")
          << ',' << r.status << '\n';
    }
  }
}

std::string summary_text(const ExperimentResult& result) {
  std::ostringstream os;
  os << std::left << std::setw(28) << "method" << std::setw(18) << "status" << std::right << std::setw(6) << "iters"
     << std::setw(14) << "real_res" << std::setw(11) << "q_factor" << std::setw(11) << "r_factor" << '\n';
  for (const auto& run : result.runs) {
    os << std::left << std::setw(28) << run.spec.label() << std::setw(18) << run.status << std::right
       << std::setw(6) << run.iterations << std::scientific << std::setprecision(3) << std::setw(14)
       << run.final_real_residual;
    if (run.diagnostics) {
      os << std::fixed << std::setprecision(4) << std::setw(11) << run.diagnostics->q_factor_estimate
         << std::setw(11) << run.diagnostics->r_factor_estimate;
    } else {
      os << std::setw(11) << "-" << std::setw(11) << "-";
    }
    os << '\n';
  }
  return os.str();
}

std::vector<RankingRow> rank_runs(const ExperimentResult& result) {
  std::vector<RankingRow> rows;
  for (const auto& run : result.runs) {
    rows.push_back({run.spec.label(), run.status + "@" + std::to_string(run.iterations), run.converged,
                    run.iterations, run.final_real_residual});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const RankingRow& a, const RankingRow& b) {
    if (a.converged != b.converged) return a.converged;
    if (a.iterations != b.iterations) return a.iterations < b.iterations;
    return a.final_real_residual < b.final_real_residual;
  });
  return rows;
}

std::string ranking_text(const std::vector<RankingRow>& ranking) {
  std::ostringstream os;
  os << std::left << std::setw(6) << "rank" << std::setw(28) << "method" << std::setw(24) << "outcome" << "real_res\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    os << std::left << std::setw(6) << i + 1 << std::setw(28) << ranking[i].label << std::setw(24)
       << ranking[i].outcome << std::scientific << std::setprecision(3) << ranking[i].final_real_residual << '\n';
  }
  return os.str();
}

// ---- r-factor sweep ---------------------------------------------------------------------

SweepResult rfactor_sweep(const ExperimentConfig& config) {
  if (config.problem.kind != ProblemKind::LinearSmall2x2) config_error("rfactor-sweep requires linear_small2x2");
  std::vector<MethodSpec> methods = config.methods;
  if (methods.empty()) {
    for (Method m : {Method::FixedPoint, Method::Anderson, Method::Crop, Method::CropAnderson}) {
      MethodSpec s;
      s.method = m;
      methods.push_back(s);
    }
  }
  for (const auto& m : methods) {
    if (m.family != MethodSpec::Family::Accelerator) config_error("rfactor-sweep takes accelerator methods only");
  }

  ExperimentConfig run_cfg = config;
  run_cfg.tol = 1e-16;
  run_cfg.maxit = 100;
  run_cfg.trace_real_residuals = false;
  const Problem problem = build_problem(config.problem);
  const double low = config.x0.kind == InitialGuess::Kind::Random ? config.x0.low : -0.5;
  const double high = config.x0.kind == InitialGuess::Kind::Random ? config.x0.high : 0.5;

  SweepResult out;
  CounterRng rng(config.sweep_seed);
  for (int s = 0; s < config.angle_samples; ++s) {
    const Vector x0 = rng.uniform_vector(2, low, high);
    const double angle = std::atan(x0(1) / x0(0));
    for (const auto& spec : methods) {
      const MethodRun run = run_method(problem, spec, x0, run_cfg);
      const double r = run.diagnostics ? run.diagnostics->r_factor_estimate : 0.0;
      out.rows.push_back({s, angle, spec.label(), r});
      const bool gamma_traced = spec.depth == 1 && spec.beta == 1.0 &&
                                (spec.method == Method::Anderson || spec.method == Method::Crop);
      if (!gamma_traced) continue;
      for (std::size_t k = 0; k < run.coefficients.size(); ++k) {
        const auto& g = run.coefficients[k].gamma;
        if (g.size() == 1) out.gammas.push_back({spec.label(), s, static_cast<int>(k + 1), g(0)});
      }
    }
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "angle,method,r_factor\n";
  for (const auto& r : sweep.rows) out << format_double(r.angle) << ',' << r.method << ',' << format_double(r.r_factor) << '\n';
}

void write_gamma_csv(std::ostream& out, const SweepResult& sweep) {
  out << "method,sample,k,gamma\n";
  for (const auto& g : sweep.gammas) {
    out << g.method << ',' << g.sample << ',' << g.k << ',' << format_double(g.gamma) << '\n';
  }
}

}  // namespace accelkit
