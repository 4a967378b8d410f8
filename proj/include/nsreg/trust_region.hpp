#pragma once

// Nonsmooth regularized trust-region method with a limited-memory
// quasi-Newton model and a proximal-gradient (or R2) step computation.

#include "nsreg/r2.hpp"

namespace nsreg {

enum class Subsolver { PG, R2 };

inline std::string_view to_string(Subsolver s) { return s == Subsolver::PG ? "pg" : "r2"; }

struct TRParams {
  double eta1 = 0.25;
  double eta2 = 0.75;
  double gamma1 = 0.25;
  double gamma2 = 0.5;
  double gamma3 = 1.5;
  double gamma4 = 2.0;
  double alpha = 1.0;
  double beta = 2.0;
  double delta0 = 1.0;
  double eps = 1e-3;
  int max_iter = 1000;
  int inner_max_iter = 5000;
  double theta = 0.9;  // inner step nu = (1 - theta) / ||B||
  BallNorm ball = BallNorm::L2;
  Subsolver subsolver = Subsolver::PG;

  void validate() const {
    require(0.0 < eta1 && eta1 <= eta2 && eta2 < 1.0, "TRParams: need 0 < eta1 <= eta2 < 1");
    require(0.0 < gamma1 && gamma1 <= gamma2 && gamma2 < 1.0 && 1.0 < gamma3 && gamma3 <= gamma4,
            "TRParams: need 0 < gamma1 <= gamma2 < 1 < gamma3 <= gamma4");
    require(alpha > 0.0, "TRParams: alpha must be positive");
    require(beta >= 1.0, "TRParams: beta must be >= 1");
    require(delta0 > 0.0, "TRParams: delta0 must be positive");
    require(eps > 0.0, "TRParams: eps must be positive");
    require(theta > 0.0 && theta < 1.0, "TRParams: theta must lie in (0, 1)");
    require(max_iter >= 0 && inner_max_iter >= 0, "TRParams: iteration limits must be >= 0");
  }
};

/// nu_k = 1 / (L_k + 1 / (alpha delta_k)).
inline double nu_k(double L_k, double alpha, double delta_k) {
  require(L_k >= 0.0 && alpha > 0.0 && delta_k > 0.0, "nu_k: need L >= 0, alpha > 0, delta > 0");
  return 1.0 / (L_k + 1.0 / (alpha * delta_k));
}

inline std::pair<StepFlag, double> classify_and_update_radius(double rho, double delta, const TRParams& p) {
  require(delta > 0.0, "classify_and_update_radius: delta must be positive");
  if (rho >= p.eta2) return {StepFlag::VerySuccessful, p.gamma3 * delta};
  if (rho >= p.eta1) return {StepFlag::Successful, delta};
  return {StepFlag::Unsuccessful, p.gamma2 * delta};
}

/// True when delta_next lies in the interval the algorithm allows for flag.
inline bool radius_update_admissible(StepFlag flag, double delta, double delta_next, const TRParams& p,
                                     double rtol = 1e-14) {
  auto in = [&](double lo, double hi) { return delta_next >= lo * (1 - rtol) && delta_next <= hi * (1 + rtol); };
  switch (flag) {
    case StepFlag::VerySuccessful: return in(p.gamma3 * delta, p.gamma4 * delta);
    case StepFlag::Successful: return in(p.gamma2 * delta, delta);
    case StepFlag::Unsuccessful: return in(p.gamma1 * delta, p.gamma2 * delta);
    case StepFlag::None: return false;
  }
  return false;
}

/// Runs the trust-region method on problem with model Hessian qn.
///
/// Per iteration: nu_k from the norm bound of B and the radius; the first
/// prox-gradient step s_{k,1} and xi at radius delta_k; stop on sqrt(xi) <= eps;
/// otherwise refine s_{k,1} on the quadratic model inside the radius
/// min(delta_k, beta ||s_{k,1}||) and accept when rho >= eta1.
inline SolveResult tr_solve(RegularizedProblem& problem, QuasiNewtonOperator& qn, const TRParams& params) {
  params.validate();
  require(qn.dim() == problem.dim(), "tr_solve: operator dimension mismatch");
  const auto& reg = problem.reg;
  SolveResult res;

  Vector x = problem.x0;
  double fx = problem.smooth.value(x);
  double hx = reg.value(x);
  Vector g = problem.smooth.gradient(x);
  double delta = params.delta0;

  for (int k = 0;; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.objective = fx + hx;
    rec.radius_or_sigma = delta;

    const double L = qn.norm_bound();
    const double nu = nu_k(L, params.alpha, delta);
    auto [xi, s1] = xi_measure(x, fx, g, nu, delta, params.ball, reg);
    rec.nu = nu;
    rec.xi = xi;
    rec.criticality = std::sqrt(xi);
    rec.scaled_criticality = rec.criticality / nu;
    rec.s1_norm = ball_norm(s1, params.ball);

    if (rec.criticality <= params.eps || k >= params.max_iter) {
      rec.counters = counters_of(problem);
      res.history.push_back(rec);
      res.status = rec.criticality <= params.eps ? SolveStatus::FirstOrderOptimal : SolveStatus::MaxIterations;
      break;
    }

    const double delta_eff = std::min(delta, params.beta * rec.s1_norm);
    rec.step_cap = delta_eff;
    const double inner_tol = std::min(0.01, std::sqrt(xi)) * xi;

    SubproblemSpec<QuasiNewtonOperator> spec{g, &qn, fx, x, &reg, delta_eff, params.ball, 0.0, params.theta};
    Vector s;
    InnerStats stats;
    if (params.subsolver == Subsolver::PG) {
      spec.nu = step_size_cor43(L, params.theta);
      std::tie(s, stats) = pg_subsolve(spec, inner_tol, params.inner_max_iter, std::optional<Vector>(s1));
    } else {
      spec.nu = nu;
      R2Params inner;
      std::tie(s, stats) = r2_model_subsolve(spec, s1, 1.0 / nu, inner_tol, params.inner_max_iter, inner);
    }
    rec.inner_iterations = stats.iterations;
    rec.step_norm = ball_norm(s, params.ball);

    const double hs = reg.value(x + s);
    const double model_decrease = (hx - hs) - g.dot(s) - 0.5 * s.dot(qn.apply(s));
    rec.model_decrease = model_decrease;
    if (!(model_decrease > 0.0)) {
      rec.counters = counters_of(problem);
      res.history.push_back(rec);
      res.status = SolveStatus::Stalled;
      break;
    }

    const Vector x_trial = x + s;
    double f_trial = kInf;
    if (std::isfinite(hs)) f_trial = problem.smooth.value(x_trial);
    const double actual = (fx + hx) - (f_trial + hs);
    const double rho = std::isfinite(f_trial + hs) ? actual / model_decrease : -kInf;
    auto [flag, delta_next] = classify_and_update_radius(rho, delta, params);
    rec.rho = rho;
    rec.flag = flag;
    rec.actual_decrease = actual;
    rec.next_radius_or_sigma = delta_next;

    if (rho >= params.eta1) {
      Vector g_new = problem.smooth.gradient(x_trial);
      qn.update(s, g_new - g);
      x = x_trial;
      fx = f_trial;
      hx = hs;
      g = std::move(g_new);
    }
    delta = delta_next;
    rec.counters = counters_of(problem);
    res.history.push_back(rec);
  }

  res.x = x;
  res.objective = fx + hx;
  res.criticality = res.history.back().criticality;
  res.iterations = static_cast<int>(res.history.size()) - 1;
  res.counters = counters_of(problem);
  return res;
}

}  // namespace nsreg
