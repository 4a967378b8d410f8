#pragma once

// Proximal operators of psi(s; x) = h(x + s) + indicator(||s|| <= delta),
// i.e. argmin_s 1/(2 nu) ||s - q||^2 + h(x + s) subject to the ball.

#include "nsreg/core.hpp"

#include <algorithm>
#include <numeric>

namespace nsreg {

struct ProxQuery {
  Vector x;  // shift
  Vector q;  // prox argument
  double nu = 1.0;
  double delta = kInf;
  BallNorm ball = BallNorm::Linf;
};

namespace detail {

inline double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

inline void check_query(const ProxQuery& pq) {
  require(pq.x.size() == pq.q.size(), "prox: shift and query dimensions differ");
  require(pq.nu > 0.0, "prox: nu must be positive");
  require(pq.delta > 0.0, "prox: delta must be positive");
}

}  // namespace detail

/// Soft threshold sign(q) max(|q| - t, 0).
inline Vector prox_l1(const Vector& q, double t) {
  require(t >= 0.0, "prox_l1: threshold must be >= 0");
  Vector out(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double a = std::abs(q[i]) - t;
    out[i] = a > 0.0 ? std::copysign(a, q[i]) : 0.0;
  }
  return out;
}

/// Hard threshold: keep q_i when |q_i| > sqrt(2 tl). Ties go to zero.
inline Vector prox_l0(const Vector& q, double tl) {
  require(tl >= 0.0, "prox_l0: threshold must be >= 0");
  const double cut = std::sqrt(2.0 * tl);
  Vector out(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) out[i] = std::abs(q[i]) > cut ? q[i] : 0.0;
  return out;
}

/// Separable L1 or L0 prox with an infinity-norm trust region.
///
/// L1 uses the nested projection proj_[-d,d](proj_[q-nu*lambda, q+nu*lambda](-x)).
/// L0 compares the four candidates {-x_i, clip(q_i), -d, +d} per coordinate,
/// preferring earlier candidates on ties.
inline Vector prox_shifted_box(const Regularizer& reg, const ProxQuery& pq);

/// Cardinality-constrained projection: minimize ||s - q||^2 subject to
/// card(x + s) <= k and ||s||_inf <= delta.
inline Vector prox_l0ball_shifted_box(int k, const ProxQuery& pq) {
  detail::check_query(pq);
  require(k >= 0, "prox_l0ball_shifted_box: k must be >= 0");
  const auto n = pq.q.size();
  const double d = pq.delta;
  Vector s(n);
  std::vector<double> penalty(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s[i] = detail::clamp(pq.q[i], -d, d);
    const double free_cost = 0.5 * (s[i] - pq.q[i]) * (s[i] - pq.q[i]);
    const double zero_cost = std::abs(pq.x[i]) <= d ? 0.5 * (pq.x[i] + pq.q[i]) * (pq.x[i] + pq.q[i]) : kInf;
    penalty[i] = zero_cost - free_cost;
  }
  const Eigen::Index to_zero = n - std::min<Eigen::Index>(k, n);
  if (to_zero == 0) return s;

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return penalty[a] < penalty[b]; });
  for (Eigen::Index j = 0; j < to_zero; ++j) {
    const auto i = order[j];
    if (!std::isfinite(penalty[i])) {
      throw ProxError("prox_l0ball_shifted_box: trust region too small to reach cardinality " +
                      std::to_string(k));
    }
    s[i] = -pq.x[i];
  }
  return s;
}

inline Vector prox_shifted_box(const Regularizer& reg, const ProxQuery& pq) {
  detail::check_query(pq);
  const auto n = pq.q.size();
  const double d = pq.delta;
  Vector s(n);
  switch (reg.kind()) {
    case RegKind::L1: {
      const double t = pq.nu * reg.lambda();
      for (Eigen::Index i = 0; i < n; ++i)
        s[i] = detail::clamp(detail::clamp(-pq.x[i], pq.q[i] - t, pq.q[i] + t), -d, d);
      return s;
    }
    case RegKind::L0: {
      const double inv_nu = 1.0 / pq.nu;
      const double lam = reg.lambda();
      for (Eigen::Index i = 0; i < n; ++i) {
        const double xi = pq.x[i];
        const double qi = pq.q[i];
        auto cost = [&](double si) { return 0.5 * inv_nu * (si - qi) * (si - qi) + (xi + si != 0.0 ? lam : 0.0); };
        double best_s = 0.0;
        double best = kInf;
        auto consider = [&](double si) {
          const double c = cost(si);
          if (c < best) {
            best = c;
            best_s = si;
          }
        };
        if (std::abs(xi) <= d) consider(-xi);
        consider(detail::clamp(qi, -d, d));
        if (std::isfinite(d)) {
          consider(-d);
          consider(d);
        }
        s[i] = best_s;
      }
      return s;
    }
    case RegKind::L0Ball: return prox_l0ball_shifted_box(reg.k(), pq);
  }
  return s;
}

/// Outcome of the Euclidean-ball L1 prox, exposing the dual root for checks.
struct L2BallProxResult {
  Vector s;
  bool boundary = false;
  double eta = 0.0;
  double root_residual = 0.0;
  int bisections = 0;
};

/// L1 prox with a Euclidean trust region, via the scalar dual equation
/// eta = ||proj_[q - nu*lambda, q + nu*lambda](-(eta/delta) x)||.
///
/// The ratio r(eta)/eta is non-increasing, so eta - r(eta) changes sign once
/// and bisection on [delta, eta_hi] is safe.
inline L2BallProxResult prox_l1_shifted_l2ball_detail(const ProxQuery& pq, double lambda) {
  detail::check_query(pq);
  require(lambda >= 0.0, "prox_l1_shifted_l2ball: lambda must be >= 0");
  const auto n = pq.q.size();
  const double t = pq.nu * lambda;
  const double d = pq.delta;

  auto box_proj = [&](double scale) {
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = detail::clamp(-scale * pq.x[i], pq.q[i] - t, pq.q[i] + t);
    return y;
  };

  L2BallProxResult out;
  Vector y0 = box_proj(1.0);
  if (!std::isfinite(d) || y0.norm() < d) {
    out.s = std::move(y0);
    return out;
  }

  out.boundary = true;
  auto residual = [&](double eta) { return eta - box_proj(eta / d).norm(); };

  double lo = d;
  double hi = std::max(d, pq.q.norm() + t * std::sqrt(static_cast<double>(n)) + pq.x.norm());
  int doublings = 0;
  while (residual(hi) <= 0.0) {
    if (++doublings > 60) throw ProxError("prox_l1_shifted_l2ball: failed to bracket the dual root");
    hi *= 2.0;
  }

  double best_eta = hi;
  double best_res = residual(hi);
  if (std::abs(residual(lo)) < std::abs(best_res)) {
    best_eta = lo;
    best_res = residual(lo);
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double r = residual(mid);
    ++out.bisections;
    if (std::abs(r) < std::abs(best_res)) {
      best_eta = mid;
      best_res = r;
    }
    if (r == 0.0) break;
    (r < 0.0 ? lo : hi) = mid;
  }
  if (!std::isfinite(best_eta) || best_eta <= 0.0) {
    throw ProxError("prox_l1_shifted_l2ball: dual root search failed");
  }

  out.eta = best_eta;
  out.root_residual = best_res;
  out.s = box_proj(best_eta / d) * (d / best_eta);
  const double sn = out.s.norm();
  if (sn > d) out.s *= d / sn;
  return out;
}

inline Vector prox_l1_shifted_l2ball(const ProxQuery& pq, double lambda) {
  return prox_l1_shifted_l2ball_detail(pq, lambda).s;
}

/// Dispatches to the operator matching (reg, ball) and counts one prox
/// evaluation on reg. Only L1 is supported with a finite Euclidean ball.
inline Vector constrained_prox(const Regularizer& reg, const ProxQuery& pq) {
  reg.count_prox();
  if (pq.ball == BallNorm::L2 && std::isfinite(pq.delta)) {
    if (reg.kind() != RegKind::L1) {
      throw ContractViolation("constrained_prox: Euclidean trust region is only available for the L1 regularizer");
    }
    return prox_l1_shifted_l2ball(pq, reg.lambda());
  }
  return prox_shifted_box(reg, pq);
}

/// Objective 1/(2 nu) ||s - q||^2 + h(x + s) + indicator(ball), for checks.
inline double prox_objective(const Regularizer& reg, const ProxQuery& pq, const Vector& s, double feas_tol = 1e-12) {
  if (ball_norm(s, pq.ball) > pq.delta + feas_tol) return kInf;
  return 0.5 / pq.nu * (s - pq.q).squaredNorm() + reg.value(pq.x + s);
}

}  // namespace nsreg
