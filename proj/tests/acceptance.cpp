// Acceptance suite: one PASS/FAIL line per criterion, then a summary line.
// Exit status is nonzero when any gating criterion fails.

#include "invariants.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>

using namespace nsreg;
using nsreg::oracle::random_vector;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1 ------------------------------------------------------------------------
Outcome prox_oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_gap[4] = {-kInf, -kInf, -kInf, -kInf};
  double worst_feas = 0.0;
  int failures = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + t % 3;
    const Vector x = random_vector(gen, n, -2, 2);
    const Vector q = random_vector(gen, n, -2, 2);
    const double nu = 0.2 + 1.3 * u(gen);
    const double lam = 0.05 + 0.95 * u(gen);
    const double delta = 0.1 + 1.9 * u(gen);

    // l1 and l0 with an infinity-norm ball: separable grid, 20001 nodes per axis
    for (int which = 0; which < 2; ++which) {
      const auto reg = which == 0 ? Regularizer::l1(lam) : Regularizer::l0(lam);
      ProxQuery pq{x, q, nu, delta, BallNorm::Linf};
      const Vector s = constrained_prox(reg, pq);
      const double feas = std::max(0.0, s.lpNorm<Eigen::Infinity>() - delta);
      auto [best, arg] = oracle::separable_grid_oracle(reg, pq, 20001);
      const double gap = oracle::raw_prox_objective(reg, pq, s) - best;
      worst_gap[which] = std::max(worst_gap[which], gap);
      worst_feas = std::max(worst_feas, feas);
      failures += gap > 1e-12 || feas > 1e-12;
    }
    // l1 with a Euclidean ball: full grid over the box, filtered by the ball
    {
      const auto reg = Regularizer::l1(lam);
      ProxQuery pq{x, q, nu, delta, BallNorm::L2};
      const Vector s = constrained_prox(reg, pq);
      const double feas = std::max(0.0, s.norm() - delta);
      const int points = n == 1 ? 200001 : n == 2 ? 1001 : 101;
      auto [best, arg] = oracle::grid_prox_oracle(reg, pq, points);
      const double gap = oracle::raw_prox_objective(reg, pq, s) - best;
      worst_gap[2] = std::max(worst_gap[2], gap);
      worst_feas = std::max(worst_feas, feas);
      failures += gap > 1e-12 || feas > 1e-12;
    }
    // cardinality ball with an infinity-norm box: exhaustive supports, dim <= 12
    {
      const int m = 1 + t % 12;
      const int k = static_cast<int>(gen() % static_cast<std::uint64_t>(m + 1));
      const Vector xm = random_vector(gen, m, -1, 1);
      const Vector qm = random_vector(gen, m, -1.5, 1.5);
      ProxQuery pq{xm, qm, nu, 1.0 + u(gen), BallNorm::Linf};
      const auto reg = Regularizer::l0_ball(k);
      const Vector s = constrained_prox(reg, pq);
      const double feas = std::max(0.0, s.lpNorm<Eigen::Infinity>() - pq.delta) + (cardinality(xm + s) > k ? 1.0 : 0.0);
      auto [best, arg] = oracle::enumerate_l0ball_oracle(k, pq);
      const double gap = 0.5 / nu * (s - qm).squaredNorm() - best;
      worst_gap[3] = std::max(worst_gap[3], gap);
      worst_feas = std::max(worst_feas, feas);
      failures += gap > 1e-12 || feas > 1e-12;
    }
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && worst_feas <= 1e-12 && secs < 30.0,
          fmt("800 instances, %d failures; worst objective excess over oracle l1/box %.2e, l0/box %.2e, l1/l2 %.2e, "
              "card/box %.2e; worst infeasibility %.1e; %.1f s (limit 30 s)",
              failures, worst_gap[0], worst_gap[1], worst_gap[2], worst_gap[3], worst_feas, secs)};
}

// 2 ------------------------------------------------------------------------
Outcome l2_dual_root() {
  std::mt19937_64 gen(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int boundary = 0, tries = 0, bad = 0;
  double worst_res = 0.0, worst_norm = 0.0;
  while (boundary < 100 && tries < 100000) {
    ++tries;
    const int n = 2 + static_cast<int>(gen() % 30);
    ProxQuery pq{random_vector(gen, n, -3, 3), random_vector(gen, n, -3, 3), 0.1 + u(gen), 0.01 + u(gen), BallNorm::L2};
    const auto r = prox_l1_shifted_l2ball_detail(pq, 0.05 + u(gen));
    if (!r.boundary) continue;
    ++boundary;
    worst_res = std::max(worst_res, std::abs(r.root_residual));
    worst_norm = std::max(worst_norm, std::abs(r.s.norm() - pq.delta));
    bad += std::abs(r.root_residual) > 1e-10 || std::abs(r.s.norm() - pq.delta) > 1e-8;
  }
  return {boundary == 100 && bad == 0,
          fmt("%d boundary instances; worst root residual %.2e (limit 1e-10), worst | |s| - delta | %.2e (limit 1e-8)",
              boundary, worst_res, worst_norm)};
}

// 3 ------------------------------------------------------------------------
Outcome inner_descent() {
  std::mt19937_64 gen(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0, steps = 0, convex = 0, over_bound = 0;
  long long worst_ratio_num = 0, worst_ratio_den = 1;
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + t % 9;
    const bool psd = t % 2 == 0;
    Matrix G = oracle::random_matrix(gen, n, n);
    Matrix H = 0.5 * (G + G.transpose()) / std::sqrt(static_cast<double>(n));
    if (psd) H = G * G.transpose() / n + 0.05 * Matrix::Identity(n, n);
    DenseOperator B(H);
    const auto reg = Regularizer::l1(0.05 + 0.5 * u(gen));
    const double theta = 0.1 + 0.8 * u(gen);
    SubproblemSpec<DenseOperator> spec{random_vector(gen, n, -2, 2),
                                       &B,
                                       0.0,
                                       random_vector(gen, n, -1, 1),
                                       &reg,
                                       0.2 + 2.0 * u(gen),
                                       t % 3 == 0 ? BallNorm::Linf : BallNorm::L2,
                                       step_size_cor43(B.norm_bound(), theta),
                                       theta};
    const double tol = 1e-5;
    InnerTrace trace;
    auto [s, stats] = pg_subsolve(spec, tol, 1000000, std::nullopt, &trace);
    for (std::size_t j = 0; j + 1 < trace.model.size(); ++j) {
      ++steps;
      if (trace.model[j + 1] > trace.model[j] - 0.5 * theta / spec.nu * trace.step_sq[j] + 1e-10) ++violations;
    }
    if (psd) {
      ++convex;
      auto [s_ref, st_ref] = pg_subsolve(spec, 1e-14, 2000000);
      const double gap = trace.model.front() - std::min(spec.model(s_ref), spec.model(s));
      const long long N = predicted_iteration_bound(tol, theta, spec.nu, B.lambda_min(), gap);
      if (stats.iterations > N) ++over_bound;
      if (static_cast<double>(stats.iterations) * worst_ratio_den > static_cast<double>(worst_ratio_num) * N) {
        worst_ratio_num = stats.iterations;
        worst_ratio_den = std::max<long long>(N, 1);
      }
    }
  }
  return {violations == 0 && over_bound == 0,
          fmt("%d subproblems, %d PG steps, %d descent violations (slack 1e-10); %d convex instances over the "
              "iteration bound, largest iterations/bound %lld/%lld",
              50, steps, violations, over_bound, worst_ratio_num, worst_ratio_den)};
}

// 4 ------------------------------------------------------------------------
Outcome tr_mechanics() {
  int runs = 0, iters = 0;
  std::vector<std::string> failures;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto inst = gen_bpdn(seed, 50, 128, 5);
    const double lam = bpdn_lambda(inst.A, inst.b);
    struct Cfg {
      Regularizer reg;
      BallNorm ball;
      Subsolver sub;
    };
    const Cfg cfgs[] = {{Regularizer::l1(lam), BallNorm::L2, Subsolver::PG},
                        {Regularizer::l1(lam), BallNorm::Linf, Subsolver::PG},
                        {Regularizer::l1(lam), BallNorm::L2, Subsolver::R2},
                        {Regularizer::l0(lam), BallNorm::Linf, Subsolver::PG},
                        {Regularizer::l0_ball(5), BallNorm::Linf, Subsolver::PG}};
    for (const auto& c : cfgs) {
      RegularizedProblem prob(bpdn_oracle(inst), c.reg, Vector::Zero(128));
      QuasiNewtonOperator qn(QNKind::LSR1, 128);
      TRParams p;
      p.ball = c.ball;
      p.subsolver = c.sub;
      p.max_iter = 500;
      const auto res = tr_solve(prob, qn, p);
      const auto rep = oracle::check_tr_history(res, p);
      ++runs;
      iters += rep.checked;
      for (const auto& f : rep.failures) failures.push_back(std::string(to_string(c.reg.kind())) + " " + f);
    }
  }
  return {failures.empty(), fmt("%d runs, %d iterations checked, %zu violations%s%s", runs, iters, failures.size(),
                                failures.empty() ? "" : "; first: ", failures.empty() ? "" : failures[0].c_str())};
}

// 5 ------------------------------------------------------------------------
struct BpdnTally {
  int converged = 0, recovered = 0, full_ok = 0, full_card = 0;
  double worst_time = 0.0;
};

BpdnTally bpdn_tally(std::optional<double> noise_std) {
  BpdnTally t;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RunConfig c;
    c.m = 50;
    c.n = 128;
    c.spikes = 5;
    c.max_iter = 500;
    c.seed = seed;
    c.noise_std = noise_std;
    const RunReport r = run(c);
    t.converged += r.status == SolveStatus::FirstOrderOptimal;
    t.recovered += r.support_recovered;
  }
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RunConfig c;
    c.seed = seed;
    c.noise_std = noise_std;
    const RunReport r = run(c);
    t.full_ok += r.status == SolveStatus::FirstOrderOptimal && r.wall_time < 60.0;
    t.full_card += r.thresholded_cardinality == 10;
    t.worst_time = std::max(t.worst_time, r.wall_time);
  }
  return t;
}

Outcome bpdn_reproduction() {
  const BpdnTally t = bpdn_tally(std::nullopt);
  const bool pass = t.converged >= 9 && t.recovered >= 8 && t.full_ok == 10 && t.full_card >= 8;
  // not gating: the same protocol with noise standard deviation 0.01
  const BpdnTally alt = bpdn_tally(0.01);
  return {pass, fmt("desk scale: first-order optimal %d/10 (need 9), exact support %d/10 (need 8); full size: "
                    "first-order optimal under 60 s %d/10 (slowest %.2f s), thresholded h/lambda = 10 on %d/10 (need 8). "
                    "For reference with noise_std 0.01: %d/10, %d/10, %d/10, %d/10",
                    t.converged, t.recovered, t.full_ok, t.worst_time, t.full_card, alt.converged, alt.recovered,
                    alt.full_ok, alt.full_card)};
}

// 6 ------------------------------------------------------------------------
Outcome l0_configs() {
  int ok[2] = {0, 0}, card[2] = {0, 0};
  for (int which = 0; which < 2; ++which) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      RunConfig c;
      c.seed = seed;
      c.reg = which == 0 ? RegKind::L0 : RegKind::L0Ball;
      c.tr_norm = BallNorm::Linf;
      const RunReport r = run(c);
      ok[which] += r.status == SolveStatus::FirstOrderOptimal;
      card[which] += r.cardinality == 10;
    }
  }
  const bool pass = ok[0] == 10 && ok[1] == 10 && card[0] >= 7 && card[1] >= 7;
  return {pass, fmt("l0: first-order optimal %d/10, card(x) = 10 on %d/10; l0ball(k=10): first-order optimal %d/10, "
                    "card(x) = 10 on %d/10 (need 10/10 optimal and 7/10 card)",
                    ok[0], card[0], ok[1], card[1])};
}

// 7 ------------------------------------------------------------------------
Outcome fh_reproduction() {
  RunConfig c;
  c.experiment = Experiment::Fh;
  c.reg = RegKind::L0;
  c.tr_norm = BallNorm::Linf;
  c.max_iter = 20000;
  const RunReport r = run(c);
  const bool pattern = r.x[0] == 0.0 && r.x[3] == 0.0 && r.x[4] == 0.0 && r.x[1] != 0.0 && r.x[2] != 0.0;
  const OdeInstance inst = gen_fh(c.seed);
  const Vector Ft = fh_simulate(inst.x_true, inst);
  double misfit = kInf;
  if (r.x[1] != 0.0) {
    try {
      misfit = (fh_simulate(to_params(r.x), inst) - Ft).norm() / Ft.norm();
    } catch (const IntegrationFailure&) {
    }
  }
  const bool pass = r.status == SolveStatus::FirstOrderOptimal && pattern && misfit <= 0.1 && r.wall_time < 300.0;
  return {pass, fmt("%s after %d iterations; x = (%.4g, %.4g, %.4g, %.4g, %.4g); zero pattern %s; relative trajectory "
                    "misfit %.3e (limit 0.1); %.1f s (limit 300 s)",
                    std::string(to_string(r.status)).c_str(), r.iterations, r.x[0], r.x[1], r.x[2], r.x[3], r.x[4],
                    pattern ? "matches {1,4,5}" : "differs", misfit, r.wall_time)};
}

// 8 ------------------------------------------------------------------------
Outcome cross_solver() {
  std::mt19937_64 gen(808);
  double worst = 0.0;
  int bad = 0, unconverged = 0;
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 9;
    const Matrix H = oracle::random_spd(gen, n, 0.2);
    const Vector c = random_vector(gen, n, -2, 2);
    const double lam = 0.1 + 0.05 * t;
    auto problem = [&] { return RegularizedProblem(oracle::quadratic_oracle(H, c), Regularizer::l1(lam), Vector::Zero(n)); };
    TRParams tp;
    tp.eps = 1e-6;
    tp.max_iter = 100000;
    R2Params rp;
    rp.eps = 1e-6;
    rp.max_iter = 100000;
    auto p1 = problem();
    QuasiNewtonOperator q1(QNKind::LSR1, n);
    const auto ra = tr_solve(p1, q1, tp);
    const Vector a = ra.x;
    tp.subsolver = Subsolver::R2;
    auto p2 = problem();
    QuasiNewtonOperator q2(QNKind::LSR1, n);
    const auto rb = tr_solve(p2, q2, tp);
    const Vector b = rb.x;
    auto p3 = problem();
    const auto rd = r2_solve(p3, rp);
    const Vector d = rd.x;
    for (const auto* r : {&ra, &rb, &rd}) unconverged += r->status != SolveStatus::FirstOrderOptimal;
    const double m = std::max({(a - b).norm(), (a - d).norm(), (b - d).norm()});
    worst = std::max(worst, m);
    bad += m > 1e-3;
  }
  return {bad == 0 && unconverged == 0,
          fmt("20 convex problems solved to eps 1e-6, %d runs not first-order optimal; worst pairwise distance %.2e "
              "(limit 1e-3)",
              unconverged, worst)};
}

// 9 ------------------------------------------------------------------------
Outcome r2_mechanics() {
  int runs = 0, checked = 0;
  std::vector<std::string> failures;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto inst = gen_bpdn(seed, 50, 128, 5);
    const double lam = bpdn_lambda(inst.A, inst.b);
    for (int which = 0; which < 3; ++which) {
      const Regularizer reg = which == 0 ? Regularizer::l1(lam) : which == 1 ? Regularizer::l0(lam) : Regularizer::l0_ball(5);
      RegularizedProblem prob(bpdn_oracle(inst), reg, Vector::Zero(128));
      R2Params p;
      const auto res = r2_solve(prob, p);
      const auto rep = oracle::check_r2_history(res, p, reg.kind() == RegKind::L1);
      ++runs;
      checked += rep.checked;
      for (const auto& f : rep.failures) failures.push_back(std::string(to_string(reg.kind())) + " " + f);
    }
  }
  // nonconvex smooth part, convex h
  {
    RegularizedProblem prob(fh_oracle(gen_fh(1)), Regularizer::l1(1.0), Vector::Constant(5, 0.5));
    R2Params p;
    p.max_iter = 2000;
    const auto res = r2_solve(prob, p);
    const auto rep = oracle::check_r2_history(res, p, true);
    ++runs;
    checked += rep.checked;
    for (const auto& f : rep.failures) failures.push_back("fh " + f);
  }
  return {failures.empty(), fmt("%d runs, %d checks (decrease >= sigma |s|^2 on convex-h runs, sigma interval on all), "
                                "%zu violations%s%s",
                                runs, checked, failures.size(), failures.empty() ? "" : "; first: ",
                                failures.empty() ? "" : failures[0].c_str())};
}

// 10 -----------------------------------------------------------------------
Outcome complexity_trend() {
  const double eps[] = {1e-1, 3e-2, 1e-2};
  double lx[3], ly[3];
  int its[3];
  for (int i = 0; i < 3; ++i) {
    RunConfig c;
    c.experiment = Experiment::Fh;
    c.reg = RegKind::L0;
    c.tr_norm = BallNorm::Linf;
    c.eps = eps[i];
    c.max_iter = 20000;
    const RunReport r = run(c);
    its[i] = std::max(1, r.iterations);
    lx[i] = std::log(1.0 / eps[i]);
    ly[i] = std::log(static_cast<double>(its[i]));
  }
  const double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (ly[0] + ly[1] + ly[2]) / 3;
  double num = 0, den = 0;
  for (int i = 0; i < 3; ++i) num += (lx[i] - mx) * (ly[i] - my), den += (lx[i] - mx) * (lx[i] - mx);
  const double slope = num / den;
  return {slope <= 2.3, fmt("FH l0 instance: iterations %d, %d, %d at eps 1e-1, 3e-2, 1e-2; fitted log-log slope %.2f "
                            "(limit 2.3)",
                            its[0], its[1], its[2], slope)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    bool gating;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {
      {1, "prox oracle equivalence", true, prox_oracle_equivalence},
      {2, "l2-ball dual root", true, l2_dual_root},
      {3, "inner solver descent and iteration bound", true, inner_descent},
      {4, "trust-region mechanics", true, tr_mechanics},
      {5, "BPDN reproduction", true, bpdn_reproduction},
      {6, "l0 and l0ball BPDN", true, l0_configs},
      {7, "FitzHugh-Nagumo reproduction", true, fh_reproduction},
      {8, "cross-solver agreement", true, cross_solver},
      {9, "R2 mechanics", true, r2_mechanics},
      {10, "complexity trend (informational)", false, complexity_trend},
  };
  int failed = 0, passed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const char* tag = o.pass ? "PASS" : (c.gating ? "FAIL" : "INFO-FAIL");
    std::cout << tag << " [" << c.id << "] " << c.name << ": " << o.detail << fmt(" (%.1f s)", seconds_since(t0))
              << std::endl;
    if (o.pass) ++passed;
    else if (c.gating) ++failed;
  }
  std::cout << "acceptance: " << passed << " passed, " << failed << " gating failures" << std::endl;
  return failed == 0 ? 0 : 1;
}
