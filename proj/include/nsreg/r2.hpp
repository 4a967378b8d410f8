#pragma once

// Quadratic-regularization method: a proximal-gradient method whose step
// length 1/sigma adapts to the agreement between the linear model and f.

#include "nsreg/inner.hpp"

namespace nsreg {

struct R2Params {
  double eta1 = 0.25;
  double eta2 = 0.75;
  double gamma1 = 2.0;  // increase on unsuccessful steps
  double gamma2 = 5.0;
  double gamma3 = 0.5;  // decrease on very successful steps
  double sigma0 = 1.0;
  double eps = 1e-3;
  int max_iter = 10000;

  void validate() const {
    require(0.0 < eta1 && eta1 <= eta2 && eta2 < 1.0, "R2Params: need 0 < eta1 <= eta2 < 1");
    require(0.0 < gamma3 && gamma3 <= 1.0 && 1.0 < gamma1 && gamma1 <= gamma2,
            "R2Params: need 0 < gamma3 <= 1 < gamma1 <= gamma2");
    require(sigma0 > 0.0, "R2Params: sigma0 must be positive");
    require(eps > 0.0, "R2Params: eps must be positive");
    require(max_iter >= 0, "R2Params: max_iter must be >= 0");
  }
};

/// sigma' = gamma3 sigma (very successful), sigma (successful) or gamma1 sigma.
inline std::pair<StepFlag, double> update_sigma(double rho, double sigma, const R2Params& p) {
  require(sigma > 0.0, "update_sigma: sigma must be positive");
  if (rho >= p.eta2) return {StepFlag::VerySuccessful, p.gamma3 * sigma};
  if (rho >= p.eta1) return {StepFlag::Successful, sigma};
  return {StepFlag::Unsuccessful, p.gamma1 * sigma};
}

/// True when sigma_next lies in the interval the R2 update allows for flag.
inline bool sigma_update_admissible(StepFlag flag, double sigma, double sigma_next, const R2Params& p,
                                    double rtol = 1e-14) {
  auto in = [&](double lo, double hi) { return sigma_next >= lo * (1 - rtol) && sigma_next <= hi * (1 + rtol); };
  switch (flag) {
    case StepFlag::VerySuccessful: return in(p.gamma3 * sigma, sigma);
    case StepFlag::Successful: return in(sigma, p.gamma1 * sigma);
    case StepFlag::Unsuccessful: return in(p.gamma1 * sigma, p.gamma2 * sigma);
    case StepFlag::None: return false;
  }
  return false;
}

/// Minimizer of f(x) + g's + sigma/2 |s|^2 + h(x + s): the shifted prox at
/// q = -g / sigma with step 1/sigma and no trust region.
inline Vector r2_step(const Vector& x, double fx, const Vector& g, double sigma, const Regularizer& reg) {
  (void)fx;
  require(sigma > 0.0, "r2_step: sigma must be positive");
  ProxQuery pq{x, -g / sigma, 1.0 / sigma, kInf, BallNorm::Linf};
  return constrained_prox(reg, pq);
}

/// R2 on f + h. Stops when sqrt(xi(sigma_k; x_k)) <= eps.
inline SolveResult r2_solve(RegularizedProblem& problem, const R2Params& params) {
  params.validate();
  const auto& reg = problem.reg;
  SolveResult res;
  Vector x = problem.x0;
  double fx = problem.smooth.value(x);
  double hx = reg.value(x);
  Vector g = problem.smooth.gradient(x);
  double sigma = params.sigma0;

  for (int k = 0;; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.objective = fx + hx;
    rec.radius_or_sigma = sigma;
    rec.nu = 1.0 / sigma;

    const Vector s = r2_step(x, fx, g, sigma, reg);
    const double hs = reg.value(x + s);
    const double lin_decrease = hx - hs - g.dot(s);  // phi(0) + psi(0) - (phi(s) + psi(s))
    const double xi = std::max(0.0, lin_decrease - 0.5 * sigma * s.squaredNorm());
    rec.xi = xi;
    rec.criticality = std::sqrt(xi);
    rec.scaled_criticality = sigma * rec.criticality;
    rec.step_norm = s.norm();
    rec.s1_norm = rec.step_norm;
    rec.step_cap = kInf;
    rec.model_decrease = lin_decrease;

    if (rec.criticality <= params.eps) {
      rec.counters = counters_of(problem);
      res.history.push_back(rec);
      res.status = SolveStatus::FirstOrderOptimal;
      break;
    }
    if (k >= params.max_iter) {
      rec.counters = counters_of(problem);
      res.history.push_back(rec);
      res.status = SolveStatus::MaxIterations;
      break;
    }
    if (!(lin_decrease > 0.0)) {
      rec.counters = counters_of(problem);
      res.history.push_back(rec);
      res.status = SolveStatus::Stalled;
      break;
    }

    const Vector x_trial = x + s;
    double f_trial = kInf;
    if (std::isfinite(hs)) f_trial = problem.smooth.value(x_trial);
    const double actual = (fx + hx) - (f_trial + hs);
    const double rho = std::isfinite(f_trial + hs) ? actual / lin_decrease : -kInf;
    auto [flag, sigma_next] = update_sigma(rho, sigma, params);
    rec.rho = rho;
    rec.flag = flag;
    rec.actual_decrease = actual;
    rec.next_radius_or_sigma = sigma_next;

    if (rho >= params.eta1) {
      x = x_trial;
      fx = f_trial;
      hx = hs;
      g = problem.smooth.gradient(x);
    }
    sigma = sigma_next;
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

/// R2 applied to the quadratic trust-region model, used as the
/// TR-R2 subsolver. Starts at s_start with regularization sigma0 and stops
/// when sqrt(xi(sigma_j; s_j)) <= tol. Model values only; no oracle calls.
template <class Op>
std::pair<Vector, InnerStats> r2_model_subsolve(const SubproblemSpec<Op>& spec, const Vector& s_start, double sigma0,
                                                double tol, int max_iter, const R2Params& params = {}) {
  require(spec.B != nullptr && spec.reg != nullptr, "r2_model_subsolve: incomplete subproblem");
  const auto& reg = *spec.reg;
  const std::int64_t prox0 = reg.prox_evals();
  const double m0 = spec.fx + reg.value(spec.x);

  Vector u = s_start;
  Vector Bu = spec.B->apply(u);
  double phi = spec.g.dot(u) + 0.5 * u.dot(Bu);
  double psi = reg.value(spec.x + u);
  double sigma = sigma0;

  InnerStats stats;
  for (int j = 0; j < max_iter; ++j) {
    const Vector grad = spec.g + Bu;
    ProxQuery pq{spec.x, u - grad / sigma, 1.0 / sigma, spec.delta, spec.ball};
    Vector u_new = constrained_prox(reg, pq);
    const Vector t = u_new - u;
    const double psi_new = reg.value(spec.x + u_new);
    const double lin_decrease = psi - psi_new - grad.dot(t);
    const double xi = std::max(0.0, lin_decrease - 0.5 * sigma * t.squaredNorm());
    ++stats.iterations;
    stats.final_residual = std::sqrt(xi);
    if (stats.final_residual <= tol || !(lin_decrease > 0.0)) {
      stats.converged = stats.final_residual <= tol;
      break;
    }
    Vector Bu_new = spec.B->apply(u_new);
    const double phi_new = spec.g.dot(u_new) + 0.5 * u_new.dot(Bu_new);
    const double rho = ((phi + psi) - (phi_new + psi_new)) / lin_decrease;
    auto [flag, sigma_next] = update_sigma(rho, sigma, params);
    (void)flag;
    if (rho >= params.eta1) {
      u = std::move(u_new);
      Bu = std::move(Bu_new);
      phi = phi_new;
      psi = psi_new;
    }
    sigma = sigma_next;
  }
  stats.model_decrease = m0 - (spec.fx + phi + psi);
  stats.prox_evals = reg.prox_evals() - prox0;
  return {std::move(u), stats};
}

/// Fixed-step proximal gradient x+ = x + prox(-nu grad f(x)), the baseline
/// comparator. Stops when sqrt(xi(inf; x, nu)) <= eps.
inline SolveResult pg_solve(RegularizedProblem& problem, double nu, double eps, int max_iter) {
  require(nu > 0.0, "pg_solve: nu must be positive");
  const auto& reg = problem.reg;
  SolveResult res;
  Vector x = problem.x0;
  double fx = problem.smooth.value(x);
  double hx = reg.value(x);
  Vector g = problem.smooth.gradient(x);

  for (int k = 0;; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.objective = fx + hx;
    rec.radius_or_sigma = 1.0 / nu;
    rec.nu = nu;
    auto [xi, s] = xi_measure(x, fx, g, nu, kInf, BallNorm::Linf, reg);
    rec.xi = xi;
    rec.criticality = std::sqrt(xi);
    rec.scaled_criticality = rec.criticality / nu;
    rec.step_norm = s.norm();
    rec.s1_norm = rec.step_norm;
    rec.step_cap = kInf;
    if (rec.criticality <= eps || k >= max_iter) {
      rec.counters = counters_of(problem);
      res.history.push_back(rec);
      res.status = rec.criticality <= eps ? SolveStatus::FirstOrderOptimal : SolveStatus::MaxIterations;
      break;
    }
    x += s;
    const double f_new = problem.smooth.value(x);
    const double h_new = reg.value(x);
    rec.actual_decrease = (fx + hx) - (f_new + h_new);
    rec.flag = StepFlag::Successful;
    rec.next_radius_or_sigma = 1.0 / nu;
    fx = f_new;
    hx = h_new;
    if (!std::isfinite(fx)) {
      rec.counters = counters_of(problem);
      res.history.push_back(rec);
      res.status = SolveStatus::Stalled;
      break;
    }
    g = problem.smooth.gradient(x);
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
