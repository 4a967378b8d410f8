#pragma once

// Proximal-gradient solver for the trust-region subproblem
//   minimize  f(x) + g's + 1/2 s'Bs + h(x + s)   subject to ||s|| <= delta.

#include "nsreg/prox.hpp"
#include "nsreg/quasi_newton.hpp"

#include <optional>

namespace nsreg {

template <class Op>
struct SubproblemSpec {
  Vector g;
  const Op* B = nullptr;
  double fx = 0.0;
  Vector x;
  const Regularizer* reg = nullptr;
  double delta = kInf;
  BallNorm ball = BallNorm::Linf;
  double nu = 1.0;
  double theta = 0.9;

  /// fx + g's + 1/2 s'Bs + h(x + s), given Bs.
  double model(const Vector& s, const Vector& Bs) const { return fx + g.dot(s) + 0.5 * s.dot(Bs) + reg->value(x + s); }
  double model(const Vector& s) const { return model(s, B->apply(s)); }
};

struct InnerStats {
  int iterations = 0;
  double final_residual = 0.0;
  double model_decrease = 0.0;  // m(0) - m(s)
  std::int64_t prox_evals = 0;
  bool converged = false;
};

/// Per-iteration model values, filled when a trace is requested.
struct InnerTrace {
  std::vector<double> model;      // m(s_j), j = 0..N
  std::vector<double> step_sq;    // ||s_{j+1} - s_j||^2
  std::vector<double> residual;   // ||v_{j+1}||
  std::vector<double> ball_norm;  // ||s_{j+1}|| in the trust-region norm
};

/// nu = (1 - theta) / ||B||, or default_nu when B = 0.
inline double step_size_cor43(double B_norm, double theta, double default_nu = 1.0) {
  require(theta > 0.0 && theta < 1.0, "step_size_cor43: theta must lie in (0, 1)");
  require(B_norm >= 0.0, "step_size_cor43: B_norm must be >= 0");
  return B_norm > 0.0 ? (1.0 - theta) / B_norm : default_nu;
}

/// Roots of ||B|| nu^2 - nu + theta; any nu in [nu_min, nu_max] gives the
/// generalized-gradient decrease.
inline std::pair<double, double> step_size_cor44(double B_norm, double theta) {
  require(B_norm > 0.0, "step_size_cor44: B_norm must be positive");
  require(theta > 0.0 && theta < 1.0 / (4.0 * B_norm), "step_size_cor44: need 0 < theta < 1/(4 ||B||)");
  const double disc = std::sqrt(1.0 - 4.0 * theta * B_norm);
  // nu_min written as 2 theta / (1 + disc) to avoid cancellation for small theta.
  const double nu_min = 2.0 * theta / (1.0 + disc);
  const double nu_max = (1.0 + disc) / (2.0 * B_norm);
  return {nu_min, nu_max};
}

/// ceil(2 / (eps^2 theta) * (1/nu - lambda_min(B)) * gap).
inline long long predicted_iteration_bound(double eps, double theta, double nu, double lambda_min_B, double gap) {
  require(eps > 0.0, "predicted_iteration_bound: eps must be positive");
  require(gap >= 0.0, "predicted_iteration_bound: gap must be >= 0");
  const double v = 2.0 / (eps * eps * theta) * (1.0 / nu - lambda_min_B) * gap;
  return static_cast<long long>(std::ceil(v));
}

/// One proximal-gradient step s_{j+1} = prox(s_j - nu (g + B s_j)).
template <class Op>
Vector pg_step(const SubproblemSpec<Op>& spec, const Vector& s, const Vector& Bs) {
  ProxQuery pq{spec.x, s - spec.nu * (spec.g + Bs), spec.nu, spec.delta, spec.ball};
  return constrained_prox(*spec.reg, pq);
}

template <class Op>
Vector pg_step(const SubproblemSpec<Op>& spec, const Vector& s) {
  return pg_step(spec, s, spec.B->apply(s));
}

/// Proximal-gradient iterations from s_start (default 0) until
/// ||(B - I/nu)(s_{j+1} - s_j)|| <= tol or max_iter steps.
///
/// Each step is monotone in the model when nu <= (1 - theta) / ||B||,
/// so the returned s never has a larger model value than s_start.
template <class Op>
std::pair<Vector, InnerStats> pg_subsolve(const SubproblemSpec<Op>& spec, double tol, int max_iter,
                                          const std::optional<Vector>& s_start = std::nullopt,
                                          InnerTrace* trace = nullptr) {
  require(spec.B != nullptr && spec.reg != nullptr, "pg_subsolve: incomplete subproblem");
  require(spec.nu > 0.0 && spec.delta > 0.0, "pg_subsolve: nu and delta must be positive");
  const auto n = spec.g.size();
  const std::int64_t prox0 = spec.reg->prox_evals();

  Vector s = s_start ? *s_start : Vector::Zero(n);
  Vector Bs = spec.B->apply(s);
  const double m0 = spec.fx + spec.reg->value(spec.x);
  double m_cur = spec.model(s, Bs);
  if (trace) trace->model.push_back(m_cur);

  InnerStats stats;
  const double inv_nu = 1.0 / spec.nu;
  for (int j = 0; j < max_iter; ++j) {
    Vector s_next = pg_step(spec, s, Bs);
    Vector Bs_next = spec.B->apply(s_next);
    const Vector ds = s_next - s;
    const double residual = (Bs_next - Bs - inv_nu * ds).norm();
    const double m_next = spec.model(s_next, Bs_next);
    ++stats.iterations;
    stats.final_residual = residual;
    if (trace) {
      trace->model.push_back(m_next);
      trace->step_sq.push_back(ds.squaredNorm());
      trace->residual.push_back(residual);
      trace->ball_norm.push_back(ball_norm(s_next, spec.ball));
    }
    // Round-off can make a converged step marginally uphill; keep the better point.
    if (m_next <= m_cur) {
      s = std::move(s_next);
      Bs = std::move(Bs_next);
      m_cur = m_next;
    } else {
      stats.converged = residual <= tol;
      break;
    }
    if (residual <= tol) {
      stats.converged = true;
      break;
    }
  }
  stats.model_decrease = m0 - m_cur;
  stats.prox_evals = spec.reg->prox_evals() - prox0;
  return {std::move(s), stats};
}

struct XiResult {
  double xi = 0.0;
  Vector s1;
};

/// xi(delta; x, nu) = f(x) + h(x) - p(delta; x, nu), computed from the first
/// proximal-gradient step s1 = prox(-nu g) on the model with B = I/nu.
inline XiResult xi_measure(const Vector& x, double fx, const Vector& g, double nu, double delta, BallNorm ball,
                           const Regularizer& reg) {
  (void)fx;  // cancels: xi = h(x) - h(x + s1) - g's1 - |s1|^2 / (2 nu)
  ProxQuery pq{x, -nu * g, nu, delta, ball};
  XiResult out;
  out.s1 = constrained_prox(reg, pq);
  const double hx = reg.value(x);
  const double hs = reg.value(x + out.s1);
  double xi = hx - hs - g.dot(out.s1) - 0.5 / nu * out.s1.squaredNorm();
  if (!std::isfinite(xi)) xi = 0.0;
  out.xi = xi < 0.0 ? 0.0 : xi;
  return out;
}

}  // namespace nsreg
