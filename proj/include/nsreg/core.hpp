#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nsreg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Raised when a caller breaks a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when a constrained proximal problem has no feasible point or the
/// scalar root search fails.
class ProxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const char* what) {
  if (!cond) throw ContractViolation(what);
}

enum class BallNorm { L2, Linf };

enum class SolveStatus { FirstOrderOptimal, MaxIterations, Stalled };

enum class StepFlag { VerySuccessful, Successful, Unsuccessful, None };

inline std::string_view to_string(BallNorm b) { return b == BallNorm::L2 ? "l2" : "linf"; }

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::FirstOrderOptimal: return "FirstOrderOptimal";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::Stalled: return "Stalled";
  }
  return "?";
}

inline std::string_view to_string(StepFlag f) {
  switch (f) {
    case StepFlag::VerySuccessful: return "VerySuccessful";
    case StepFlag::Successful: return "Successful";
    case StepFlag::Unsuccessful: return "Unsuccessful";
    case StepFlag::None: return "None";
  }
  return "?";
}

inline double ball_norm(const Vector& s, BallNorm b) {
  if (s.size() == 0) return 0.0;
  return b == BallNorm::L2 ? s.norm() : s.lpNorm<Eigen::Infinity>();
}

inline int cardinality(const Vector& x) {
  int c = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) c += (x[i] != 0.0);
  return c;
}

/// Smooth part f of the objective together with evaluation counters.
///
/// Evaluation callbacks are stored by value; each call through value() or
/// gradient() bumps the matching counter by exactly one.
class SmoothOracle {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradFn = std::function<Vector(const Vector&)>;

  SmoothOracle() = default;
  SmoothOracle(int dim, ValueFn f, GradFn g) : dim_(dim), f_(std::move(f)), g_(std::move(g)) {
    require(dim > 0, "SmoothOracle: dimension must be positive");
  }

  int dim() const { return dim_; }

  double value(const Vector& x) {
    check_dim(x);
    ++f_evals_;
    return f_(x);
  }

  Vector gradient(const Vector& x) {
    check_dim(x);
    ++grad_evals_;
    return g_(x);
  }

  std::int64_t f_evals() const { return f_evals_; }
  std::int64_t grad_evals() const { return grad_evals_; }
  void reset_counters() { f_evals_ = grad_evals_ = 0; }

 private:
  void check_dim(const Vector& x) const {
    if (x.size() != dim_) {
      throw ContractViolation("SmoothOracle: dimension mismatch (expected " + std::to_string(dim_) +
                              ", got " + std::to_string(x.size()) + ")");
    }
  }

  int dim_ = 0;
  ValueFn f_;
  GradFn g_;
  std::int64_t f_evals_ = 0;
  std::int64_t grad_evals_ = 0;
};

enum class RegKind { L1, L0, L0Ball };

inline std::string_view to_string(RegKind k) {
  switch (k) {
    case RegKind::L1: return "l1";
    case RegKind::L0: return "l0";
    case RegKind::L0Ball: return "l0ball";
  }
  return "?";
}

/// Nonsmooth term h: lambda*||x||_1, lambda*||x||_0 or the indicator of
/// {x : card(x) <= k}.
class Regularizer {
 public:
  static Regularizer l1(double lambda) { return Regularizer(RegKind::L1, lambda, 0); }
  static Regularizer l0(double lambda) { return Regularizer(RegKind::L0, lambda, 0); }
  static Regularizer l0_ball(int k) { return Regularizer(RegKind::L0Ball, 0.0, k); }

  RegKind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  int k() const { return k_; }

  double value(const Vector& x) const {
    switch (kind_) {
      case RegKind::L1: return lambda_ == 0.0 ? 0.0 : lambda_ * x.lpNorm<1>();
      case RegKind::L0: return lambda_ == 0.0 ? 0.0 : lambda_ * cardinality(x);
      case RegKind::L0Ball: return cardinality(x) <= k_ ? 0.0 : kInf;
    }
    return kInf;
  }

  std::int64_t prox_evals() const { return prox_evals_; }
  void count_prox() const { ++prox_evals_; }
  void reset_counter() { prox_evals_ = 0; }

 private:
  Regularizer(RegKind kind, double lambda, int k) : kind_(kind), lambda_(lambda), k_(k) {
    require(lambda >= 0.0 && std::isfinite(lambda), "Regularizer: lambda must be finite and >= 0");
    require(k >= 0, "Regularizer: k must be >= 0");
  }

  RegKind kind_;
  double lambda_;
  int k_;
  mutable std::int64_t prox_evals_ = 0;
};

/// minimize f(x) + h(x) from x0.
struct RegularizedProblem {
  SmoothOracle smooth;
  Regularizer reg;
  Vector x0;

  RegularizedProblem(SmoothOracle f, Regularizer h, Vector start)
      : smooth(std::move(f)), reg(std::move(h)), x0(std::move(start)) {
    require(x0.size() == smooth.dim(), "RegularizedProblem: x0 dimension mismatch");
    require(std::isfinite(reg.value(x0)), "RegularizedProblem: h(x0) must be finite");
  }

  int dim() const { return smooth.dim(); }
};

/// f(x) + h(x). Counts one f evaluation; +inf when h(x) is infinite.
inline double objective(RegularizedProblem& p, const Vector& x) {
  const double fx = p.smooth.value(x);
  return fx + p.reg.value(x);
}

inline Vector grad(RegularizedProblem& p, const Vector& x) { return p.smooth.gradient(x); }

struct Counters {
  std::int64_t f_evals = 0;
  std::int64_t grad_evals = 0;
  std::int64_t prox_evals = 0;

  friend bool operator==(const Counters&, const Counters&) = default;
};

inline Counters counters_of(const RegularizedProblem& p) {
  return {p.smooth.f_evals(), p.smooth.grad_evals(), p.reg.prox_evals()};
}

/// One outer iteration of a solver.
///
/// The first eight fields form the exported history schema; the remaining
/// ones are diagnostics used by the invariant checks. The final record of a
/// converged run carries flag None and rho = NaN.
struct IterationRecord {
  int k = 0;
  double objective = 0.0;
  double criticality = 0.0;
  double radius_or_sigma = 0.0;
  double rho = std::numeric_limits<double>::quiet_NaN();
  StepFlag flag = StepFlag::None;
  Counters counters;

  double xi = 0.0;
  double scaled_criticality = 0.0;  // nu^-1 * sqrt(xi)
  double nu = 0.0;
  double step_norm = 0.0;
  double s1_norm = 0.0;
  double step_cap = 0.0;
  double model_decrease = 0.0;
  double actual_decrease = 0.0;
  double next_radius_or_sigma = 0.0;
  int inner_iterations = 0;
};

struct SolveResult {
  Vector x;
  SolveStatus status = SolveStatus::MaxIterations;
  std::vector<IterationRecord> history;
  Counters counters;
  double objective = 0.0;
  double criticality = 0.0;
  int iterations = 0;
};

}  // namespace nsreg
