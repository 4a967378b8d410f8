// nsreg command-line driver.
//
//   nsreg run --experiment bpdn --solver tr --subsolver pg --reg l1 --tr-norm l2 --seed 1 --out report.json
//   nsreg summary report1.json report2.json
//   nsreg gen --experiment fh --seed 3 --out instance.json
//
// Exit codes: 0 first-order optimal, 2 usage error, 3 stalled, 4 iteration limit, 1 other failure.

#include "nsreg/nsreg.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace {

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("NSREG_LOG")) {
    const std::string v = env;
    if (v == "error") spdlog::set_level(spdlog::level::err);
    else if (v == "info") spdlog::set_level(spdlog::level::info);
    else if (v == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ignoring NSREG_LOG={}; expected error, info or debug", v);
  }
}

int exit_code(nsreg::SolveStatus s) {
  switch (s) {
    case nsreg::SolveStatus::FirstOrderOptimal: return 0;
    case nsreg::SolveStatus::Stalled: return 3;
    case nsreg::SolveStatus::MaxIterations: return 4;
  }
  return 1;
}

struct RunFlags {
  std::string config_file;
  std::string experiment, solver, subsolver, reg, tr_norm, format;
  std::optional<double> eps, lambda_scale, lambda, noise_std, lipschitz, threshold;
  std::optional<int> max_iter, inner_max_iter, memory, k_ball, m, n, spikes;
  std::optional<std::uint64_t> seed;
  std::string out, history;
};

void add_run_options(CLI::App* app, RunFlags& f) {
  app->add_option("--config", f.config_file, "JSON config file; flags override its values");
  app->add_option("--experiment", f.experiment, "bpdn | fh");
  app->add_option("--solver", f.solver, "tr | r2 | pg");
  app->add_option("--subsolver", f.subsolver, "pg | r2 (tr only)");
  app->add_option("--reg", f.reg, "l1 | l0 | l0ball");
  app->add_option("--tr-norm", f.tr_norm, "l2 | linf");
  app->add_option("--format", f.format, "history format: json | csv");
  app->add_option("--eps", f.eps, "stopping tolerance on sqrt(xi)");
  app->add_option("--max-iter", f.max_iter, "outer iteration limit");
  app->add_option("--inner-max-iter", f.inner_max_iter, "inner iteration limit");
  app->add_option("--memory", f.memory, "quasi-Newton memory");
  app->add_option("--seed", f.seed, "instance seed");
  app->add_option("--lambda-scale", f.lambda_scale, "bpdn: lambda = scale * ||A'b||_inf");
  app->add_option("--lambda", f.lambda, "explicit lambda");
  app->add_option("--k-ball", f.k_ball, "cardinality bound for l0ball");
  app->add_option("--noise-std", f.noise_std, "noise standard deviation");
  app->add_option("-m", f.m, "bpdn rows");
  app->add_option("-n", f.n, "bpdn columns");
  app->add_option("--spikes", f.spikes, "bpdn nonzeros in x_true");
  app->add_option("--lipschitz", f.lipschitz, "pg baseline Lipschitz estimate");
  app->add_option("--threshold", f.threshold, "support threshold for recovery metrics");
  app->add_option("--out", f.out, "report JSON path");
  app->add_option("--history", f.history, "history output path (format from --format)");
}

nsreg::RunConfig build_config(const RunFlags& f) {
  using namespace nsreg;
  RunConfig c;
  if (!f.config_file.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(f.config_file));
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config file '" + f.config_file + "': " + e.what());
    }
    apply_config_json(c, j);
  }
  if (!f.experiment.empty()) c.experiment = parse_experiment(f.experiment);
  if (!f.solver.empty()) c.solver = parse_solver(f.solver);
  if (!f.subsolver.empty()) c.subsolver = parse_subsolver(f.subsolver);
  if (!f.reg.empty()) c.reg = parse_reg(f.reg);
  if (!f.tr_norm.empty()) c.tr_norm = parse_ball(f.tr_norm);
  if (!f.format.empty()) c.format = parse_format(f.format);
  if (f.eps) c.eps = *f.eps;
  if (f.max_iter) c.max_iter = *f.max_iter;
  if (f.inner_max_iter) c.inner_max_iter = *f.inner_max_iter;
  if (f.memory) c.memory = *f.memory;
  if (f.seed) c.seed = *f.seed;
  if (f.lambda_scale) c.lambda_scale = *f.lambda_scale;
  if (f.lambda) c.lambda = *f.lambda;
  if (f.k_ball) c.k_ball = *f.k_ball;
  if (f.noise_std) c.noise_std = *f.noise_std;
  if (f.m) c.m = *f.m;
  if (f.n) c.n = *f.n;
  if (f.spikes) c.spikes = *f.spikes;
  if (f.lipschitz) c.lipschitz = *f.lipschitz;
  if (f.threshold) c.threshold = *f.threshold;
  if (!f.out.empty()) c.out_path = f.out;
  c.validate();
  return c;
}

int cmd_run(const RunFlags& f) {
  const nsreg::RunConfig config = build_config(f);
  spdlog::info("running {} on {} (reg {}, seed {})", nsreg::solver_label(config), nsreg::to_string(config.experiment),
               nsreg::to_string(config.reg), config.seed);
  const nsreg::RunReport rep = nsreg::run(config);
  for (const auto& r : rep.history)
    spdlog::debug("k={} obj={:.10g} crit={:.3e} radius/sigma={:.3e} rho={:.3g}", r.k, r.objective, r.criticality,
                  r.radius_or_sigma, r.rho);
  spdlog::info("{} after {} iterations, objective {:.10g}, {:.3f}s", nsreg::to_string(rep.status), rep.iterations,
               rep.objective, rep.wall_time);

  const std::string body = nsreg::report_to_json(rep).dump(2) + "\n";
  if (config.out_path.empty()) std::cout << body;
  else nsreg::write_text_file(config.out_path, body);
  if (!f.history.empty()) nsreg::emit_history(rep.history, config.format, f.history);
  if (rep.status == nsreg::SolveStatus::Stalled) spdlog::error("solver stalled; partial report written");
  return exit_code(rep.status);
}

int cmd_summary(const std::vector<std::string>& files) {
  std::vector<nsreg::RunReport> reports;
  for (const auto& path : files) reports.push_back(nsreg::report_from_json(nlohmann::json::parse(nsreg::read_text_file(path))));
  std::cout << nsreg::summary_table(reports);
  return 0;
}

int cmd_gen(const std::string& experiment, std::uint64_t seed, std::optional<double> noise_std, int m, int n,
            int spikes, const std::string& out) {
  nlohmann::json j;
  if (nsreg::parse_experiment(experiment) == nsreg::Experiment::Bpdn) {
    if (!(m > 0 && m <= n && spikes >= 0 && spikes <= n))
      throw nsreg::UsageError("bpdn dimensions need 0 < m <= n and 0 <= spikes <= n");
    j = nsreg::to_json(nsreg::gen_bpdn(seed, m, n, spikes, noise_std.value_or(0.1)));
  } else {
    j = nsreg::to_json(nsreg::gen_fh(seed, noise_std.value_or(std::sqrt(0.1))));
  }
  const std::string body = j.dump() + "\n";
  if (out.empty()) std::cout << body;
  else nsreg::write_text_file(out, body);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Nonsmooth regularized trust-region and R2 solvers"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "solve one configured instance");
  add_run_options(run, run_flags);

  std::vector<std::string> summary_files;
  auto* summary = app.add_subcommand("summary", "print a table from report JSON files");
  summary->add_option("reports", summary_files, "report files")->required()->check(CLI::ExistingFile);

  std::string gen_experiment = "bpdn", gen_out;
  std::uint64_t gen_seed = 1;
  std::optional<double> gen_noise;
  int gen_m = 200, gen_n = 512, gen_spikes = 10;
  auto* gen = app.add_subcommand("gen", "write a generated instance as JSON");
  gen->add_option("--experiment", gen_experiment, "bpdn | fh");
  gen->add_option("--seed", gen_seed, "instance seed");
  gen->add_option("--noise-std", gen_noise, "noise standard deviation");
  gen->add_option("-m", gen_m, "bpdn rows");
  gen->add_option("-n", gen_n, "bpdn columns");
  gen->add_option("--spikes", gen_spikes, "bpdn nonzeros");
  gen->add_option("--out", gen_out, "output path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*summary) return cmd_summary(summary_files);
    if (*gen) return cmd_gen(gen_experiment, gen_seed, gen_noise, gen_m, gen_n, gen_spikes, gen_out);
  } catch (const nsreg::UsageError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}
