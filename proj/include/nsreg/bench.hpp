#pragma once

// Experiment harness: builds an instance from a RunConfig, runs a solver and
// collects the history and recovery metrics into a RunReport.

#include "nsreg/experiments.hpp"
#include "nsreg/trust_region.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

namespace nsreg {

enum class Experiment { Bpdn, Fh };
enum class SolverKind { TR, R2, PG };
enum class HistoryFormat { Json, Csv };

/// Invalid option combination; maps to exit code 2 in the CLI.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  Experiment experiment = Experiment::Bpdn;
  SolverKind solver = SolverKind::TR;
  Subsolver subsolver = Subsolver::PG;
  RegKind reg = RegKind::L1;
  BallNorm tr_norm = BallNorm::L2;
  double eps = 1e-3;
  int max_iter = 1000;
  int inner_max_iter = 5000;
  int memory = 5;
  std::uint64_t seed = 1;
  double lambda_scale = 0.1;            // bpdn: lambda = lambda_scale * ||A'b||_inf
  std::optional<double> lambda;         // explicit lambda overrides lambda_scale (fh default 1)
  int k_ball = 10;
  std::optional<double> noise_std;      // default: 0.1 (bpdn), sqrt(0.1) (fh)
  int m = 200;
  int n = 512;
  int spikes = 10;
  double lipschitz = 1.0;               // pg baseline step nu = 1 / lipschitz
  double threshold = 0.5;               // support threshold for recovery metrics
  std::string out_path;
  HistoryFormat format = HistoryFormat::Json;

  void validate() const {
    if (reg == RegKind::L1 || tr_norm == BallNorm::Linf) {
    } else {
      throw UsageError("the l2 trust region is only available with --reg l1");
    }
    if (eps <= 0.0) throw UsageError("--eps must be positive");
    if (max_iter < 0 || inner_max_iter < 0) throw UsageError("iteration limits must be >= 0");
    if (memory <= 0) throw UsageError("--memory must be positive");
    if (k_ball < 0) throw UsageError("--k-ball must be >= 0");
    if (lambda && *lambda < 0.0) throw UsageError("--lambda must be >= 0");
    if (lambda_scale < 0.0) throw UsageError("--lambda-scale must be >= 0");
    if (noise_std && *noise_std < 0.0) throw UsageError("--noise-std must be >= 0");
    if (experiment == Experiment::Bpdn && !(m > 0 && m <= n && spikes >= 0 && spikes <= n))
      throw UsageError("bpdn dimensions need 0 < m <= n and 0 <= spikes <= n");
    if (lipschitz <= 0.0) throw UsageError("--lipschitz must be positive");
  }
};

inline std::string_view to_string(Experiment e) { return e == Experiment::Bpdn ? "bpdn" : "fh"; }
inline std::string_view to_string(SolverKind s) {
  switch (s) {
    case SolverKind::TR: return "tr";
    case SolverKind::R2: return "r2";
    case SolverKind::PG: return "pg";
  }
  return "?";
}
inline std::string_view to_string(HistoryFormat f) { return f == HistoryFormat::Json ? "json" : "csv"; }

namespace detail {

template <class E>
E parse_enum(std::string_view text, std::initializer_list<std::pair<std::string_view, E>> table, const char* what) {
  for (const auto& [name, value] : table)
    if (name == text) return value;
  throw UsageError(std::string("unknown ") + what + " '" + std::string(text) + "'");
}

}  // namespace detail

inline Experiment parse_experiment(std::string_view s) {
  return detail::parse_enum<Experiment>(s, {{"bpdn", Experiment::Bpdn}, {"fh", Experiment::Fh}}, "experiment");
}
inline SolverKind parse_solver(std::string_view s) {
  return detail::parse_enum<SolverKind>(s, {{"tr", SolverKind::TR}, {"r2", SolverKind::R2}, {"pg", SolverKind::PG}},
                                        "solver");
}
inline Subsolver parse_subsolver(std::string_view s) {
  return detail::parse_enum<Subsolver>(s, {{"pg", Subsolver::PG}, {"r2", Subsolver::R2}}, "subsolver");
}
inline RegKind parse_reg(std::string_view s) {
  return detail::parse_enum<RegKind>(s, {{"l1", RegKind::L1}, {"l0", RegKind::L0}, {"l0ball", RegKind::L0Ball}},
                                     "regularizer");
}
inline BallNorm parse_ball(std::string_view s) {
  return detail::parse_enum<BallNorm>(s, {{"l2", BallNorm::L2}, {"linf", BallNorm::Linf}}, "trust-region norm");
}
inline HistoryFormat parse_format(std::string_view s) {
  return detail::parse_enum<HistoryFormat>(s, {{"json", HistoryFormat::Json}, {"csv", HistoryFormat::Csv}}, "format");
}

inline std::string solver_label(const RunConfig& c) {
  switch (c.solver) {
    case SolverKind::TR: return c.subsolver == Subsolver::PG ? "TR-PG" : "TR-R2";
    case SolverKind::R2: return "R2";
    case SolverKind::PG: return "PG";
  }
  return "?";
}

struct RunReport {
  RunConfig config;
  SolveStatus status = SolveStatus::MaxIterations;
  double objective = 0.0;
  double criticality = 0.0;
  int iterations = 0;
  Counters counters;
  double wall_time = 0.0;
  double lambda = 0.0;
  Vector x;
  Vector x_true;
  double error_norm = 0.0;          // ||x - x_true||_2
  double h_over_lambda = 0.0;       // h(x)/lambda, or card(x) for l0ball
  int cardinality = 0;
  int thresholded_cardinality = 0;  // #{i : |x_i| >= threshold}
  bool support_recovered = false;   // thresholded support equals supp(x_true)
  std::vector<IterationRecord> history;
};

/// Builds the configured instance and runs the configured solver.
inline RunReport run(const RunConfig& config) {
  config.validate();
  RunReport rep;
  rep.config = config;

  std::optional<RegularizedProblem> problem;
  int dim = 0;
  if (config.experiment == Experiment::Bpdn) {
    const BpdnInstance inst = gen_bpdn(config.seed, config.m, config.n, config.spikes, config.noise_std.value_or(0.1));
    rep.lambda = config.lambda.value_or(bpdn_lambda(inst.A, inst.b, config.lambda_scale));
    rep.x_true = inst.x_true;
    dim = config.n;
    Regularizer reg = config.reg == RegKind::L1   ? Regularizer::l1(rep.lambda)
                      : config.reg == RegKind::L0 ? Regularizer::l0(rep.lambda)
                                                  : Regularizer::l0_ball(config.k_ball);
    problem.emplace(bpdn_oracle(inst), reg, Vector::Zero(dim));
  } else {
    const OdeInstance inst = gen_fh(config.seed, config.noise_std.value_or(std::sqrt(0.1)));
    rep.lambda = config.lambda.value_or(1.0);
    rep.x_true = Eigen::Map<const Vector>(inst.x_true.data(), 5);
    dim = 5;
    Regularizer reg = config.reg == RegKind::L1   ? Regularizer::l1(rep.lambda)
                      : config.reg == RegKind::L0 ? Regularizer::l0(rep.lambda)
                                                  : Regularizer::l0_ball(config.k_ball);
    problem.emplace(fh_oracle(inst), reg, Vector::Constant(5, 0.5));
  }

  const auto t0 = std::chrono::steady_clock::now();
  SolveResult res;
  switch (config.solver) {
    case SolverKind::TR: {
      TRParams p;
      p.eps = config.eps;
      p.max_iter = config.max_iter;
      p.inner_max_iter = config.inner_max_iter;
      p.ball = config.tr_norm;
      p.subsolver = config.subsolver;
      QuasiNewtonOperator qn(config.experiment == Experiment::Bpdn ? QNKind::LSR1 : QNKind::LBFGS, dim, config.memory);
      res = tr_solve(*problem, qn, p);
      break;
    }
    case SolverKind::R2: {
      R2Params p;
      p.eps = config.eps;
      p.max_iter = config.max_iter;
      res = r2_solve(*problem, p);
      break;
    }
    case SolverKind::PG: res = pg_solve(*problem, 1.0 / config.lipschitz, config.eps, config.max_iter); break;
  }
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  rep.status = res.status;
  rep.objective = res.objective;
  rep.criticality = res.criticality;
  rep.iterations = res.iterations;
  rep.counters = res.counters;
  rep.history = std::move(res.history);
  rep.x = res.x;
  rep.error_norm = (rep.x - rep.x_true).norm();
  rep.cardinality = cardinality(rep.x);
  rep.h_over_lambda = config.reg == RegKind::L0Ball ? rep.cardinality
                      : rep.lambda > 0.0            ? problem->reg.value(rep.x) / rep.lambda
                                                    : 0.0;
  bool recovered = true;
  for (Eigen::Index i = 0; i < rep.x.size(); ++i) {
    const bool on = std::abs(rep.x[i]) >= config.threshold;
    rep.thresholded_cardinality += on;
    recovered = recovered && (on == (rep.x_true[i] != 0.0));
  }
  rep.support_recovered = recovered;
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Non-finite values are written as strings so JSON output stays valid.
inline nlohmann::json number_to_json(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  return v;
}

inline double number_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "Infinity") return kInf;
    if (s == "-Infinity") return -kInf;
    throw std::runtime_error("history JSON: bad number '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace detail

inline const std::vector<std::string>& history_columns() {
  static const std::vector<std::string> cols{"k",      "objective", "criticality", "radius_or_sigma",
                                             "rho",    "f_evals",   "grad_evals",  "prox_evals"};
  return cols;
}

inline nlohmann::json history_to_json(const std::vector<IterationRecord>& history) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : history) {
    rows.push_back({{"k", r.k},
                    {"objective", detail::number_to_json(r.objective)},
                    {"criticality", detail::number_to_json(r.criticality)},
                    {"radius_or_sigma", detail::number_to_json(r.radius_or_sigma)},
                    {"rho", detail::number_to_json(r.rho)},
                    {"f_evals", r.counters.f_evals},
                    {"grad_evals", r.counters.grad_evals},
                    {"prox_evals", r.counters.prox_evals}});
  }
  return rows;
}

inline std::vector<IterationRecord> history_from_json(const nlohmann::json& rows) {
  std::vector<IterationRecord> out;
  for (const auto& j : rows) {
    IterationRecord r;
    r.k = j.at("k").get<int>();
    r.objective = detail::number_from_json(j.at("objective"));
    r.criticality = detail::number_from_json(j.at("criticality"));
    r.radius_or_sigma = detail::number_from_json(j.at("radius_or_sigma"));
    r.rho = detail::number_from_json(j.at("rho"));
    r.counters.f_evals = j.at("f_evals").get<std::int64_t>();
    r.counters.grad_evals = j.at("grad_evals").get<std::int64_t>();
    r.counters.prox_evals = j.at("prox_evals").get<std::int64_t>();
    out.push_back(r);
  }
  return out;
}

inline std::string history_to_csv(const std::vector<IterationRecord>& history) {
  std::string out;
  const auto& cols = history_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += '\n';
  for (const auto& r : history) {
    out += std::to_string(r.k) + ',' + detail::format_double(r.objective) + ',' + detail::format_double(r.criticality) +
           ',' + detail::format_double(r.radius_or_sigma) + ',' + detail::format_double(r.rho) + ',' +
           std::to_string(r.counters.f_evals) + ',' + std::to_string(r.counters.grad_evals) + ',' +
           std::to_string(r.counters.prox_evals) + '\n';
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << text;
  os.flush();
  if (!os) throw std::runtime_error("error while writing '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Writes the history as CSV (header + one line per record) or as a JSON array.
inline void emit_history(const std::vector<IterationRecord>& history, HistoryFormat format, const std::string& path) {
  write_text_file(path, format == HistoryFormat::Csv ? history_to_csv(history) : history_to_json(history).dump(2) + "\n");
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j{{"experiment", to_string(c.experiment)},
                   {"solver", to_string(c.solver)},
                   {"subsolver", to_string(c.subsolver)},
                   {"reg", to_string(c.reg)},
                   {"tr_norm", to_string(c.tr_norm)},
                   {"eps", c.eps},
                   {"max_iter", c.max_iter},
                   {"inner_max_iter", c.inner_max_iter},
                   {"memory", c.memory},
                   {"seed", c.seed},
                   {"lambda_scale", c.lambda_scale},
                   {"k_ball", c.k_ball},
                   {"m", c.m},
                   {"n", c.n},
                   {"spikes", c.spikes},
                   {"lipschitz", c.lipschitz},
                   {"threshold", c.threshold},
                   {"format", to_string(c.format)}};
  if (c.lambda) j["lambda"] = *c.lambda;
  if (c.noise_std) j["noise_std"] = *c.noise_std;
  if (!c.out_path.empty()) j["out"] = c.out_path;
  return j;
}

/// Fills the fields present in j; absent keys keep the value already in c.
inline void apply_config_json(RunConfig& c, const nlohmann::json& j) {
  auto str = [&](const char* key) { return j.at(key).get<std::string>(); };
  if (j.contains("experiment")) c.experiment = parse_experiment(str("experiment"));
  if (j.contains("solver")) c.solver = parse_solver(str("solver"));
  if (j.contains("subsolver")) c.subsolver = parse_subsolver(str("subsolver"));
  if (j.contains("reg")) c.reg = parse_reg(str("reg"));
  if (j.contains("tr_norm")) c.tr_norm = parse_ball(str("tr_norm"));
  if (j.contains("format")) c.format = parse_format(str("format"));
  if (j.contains("eps")) c.eps = j["eps"].get<double>();
  if (j.contains("max_iter")) c.max_iter = j["max_iter"].get<int>();
  if (j.contains("inner_max_iter")) c.inner_max_iter = j["inner_max_iter"].get<int>();
  if (j.contains("memory")) c.memory = j["memory"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("lambda_scale")) c.lambda_scale = j["lambda_scale"].get<double>();
  if (j.contains("lambda")) c.lambda = j["lambda"].get<double>();
  if (j.contains("k_ball")) c.k_ball = j["k_ball"].get<int>();
  if (j.contains("noise_std")) c.noise_std = j["noise_std"].get<double>();
  if (j.contains("m")) c.m = j["m"].get<int>();
  if (j.contains("n")) c.n = j["n"].get<int>();
  if (j.contains("spikes")) c.spikes = j["spikes"].get<int>();
  if (j.contains("lipschitz")) c.lipschitz = j["lipschitz"].get<double>();
  if (j.contains("threshold")) c.threshold = j["threshold"].get<double>();
  if (j.contains("out")) c.out_path = str("out");
}

inline nlohmann::json report_to_json(const RunReport& r) {
  return {{"config", config_to_json(r.config)},
          {"solver", solver_label(r.config)},
          {"status", to_string(r.status)},
          {"objective", detail::number_to_json(r.objective)},
          {"criticality", detail::number_to_json(r.criticality)},
          {"iterations", r.iterations},
          {"f_evals", r.counters.f_evals},
          {"grad_evals", r.counters.grad_evals},
          {"prox_evals", r.counters.prox_evals},
          {"wall_time", r.wall_time},
          {"lambda", r.lambda},
          {"x", vector_to_json(r.x)},
          {"x_true", vector_to_json(r.x_true)},
          {"error_norm", r.error_norm},
          {"h_over_lambda", r.h_over_lambda},
          {"cardinality", r.cardinality},
          {"thresholded_cardinality", r.thresholded_cardinality},
          {"support_recovered", r.support_recovered},
          {"history", history_to_json(r.history)}};
}

inline RunReport report_from_json(const nlohmann::json& j) {
  RunReport r;
  apply_config_json(r.config, j.at("config"));
  const auto status = j.at("status").get<std::string>();
  r.status = status == "FirstOrderOptimal" ? SolveStatus::FirstOrderOptimal
             : status == "Stalled"         ? SolveStatus::Stalled
                                           : SolveStatus::MaxIterations;
  r.objective = detail::number_from_json(j.at("objective"));
  r.criticality = detail::number_from_json(j.at("criticality"));
  r.iterations = j.at("iterations").get<int>();
  r.counters = {j.at("f_evals").get<std::int64_t>(), j.at("grad_evals").get<std::int64_t>(),
                j.at("prox_evals").get<std::int64_t>()};
  r.wall_time = j.at("wall_time").get<double>();
  r.lambda = j.at("lambda").get<double>();
  r.x = vector_from_json(j.at("x"));
  r.x_true = vector_from_json(j.at("x_true"));
  r.error_norm = j.at("error_norm").get<double>();
  r.h_over_lambda = j.at("h_over_lambda").get<double>();
  r.cardinality = j.at("cardinality").get<int>();
  r.thresholded_cardinality = j.at("thresholded_cardinality").get<int>();
  r.support_recovered = j.at("support_recovered").get<bool>();
  r.history = history_from_json(j.at("history"));
  return r;
}

/// Aligned text table, one row per report.
inline std::string summary_table(const std::vector<RunReport>& reports) {
  require(!reports.empty(), "summary_table: need at least one report");
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"solver", "grad evals", "prox evals", "||x - x_true||", "h/lambda", "card(thr)", "status"});
  for (const auto& r : reports) {
    std::ostringstream err, hl;
    err << std::setprecision(4) << std::scientific << r.error_norm;
    hl << std::setprecision(4) << std::fixed << r.h_over_lambda;
    rows.push_back({solver_label(r.config), std::to_string(r.counters.grad_evals), std::to_string(r.counters.prox_evals),
                    err.str(), hl.str(), std::to_string(r.thresholded_cardinality), std::string(to_string(r.status))});
  }
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      line += row[c] + std::string(width[c] - row[c].size(), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  return out;
}

}  // namespace nsreg
