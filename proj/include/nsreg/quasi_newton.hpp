#pragma once

#include "nsreg/core.hpp"

#include <deque>

namespace nsreg {

enum class QNKind { LSR1, LBFGS };

inline std::string_view to_string(QNKind k) { return k == QNKind::LSR1 ? "lsr1" : "lbfgs"; }

/// Limited-memory SR1 / BFGS approximation B of the Hessian.
///
/// B = scale * I + sum of the rank-one (SR1) or rank-two (BFGS) corrections
/// of the stored pairs, rebuilt from scratch whenever the pair list changes.
/// For LBFGS the scale is y'y / s'y of the newest pair; for LSR1 it stays at
/// its initial value. If the norm bound exceeds max_norm after an update the
/// operator drops all pairs.
class QuasiNewtonOperator {
 public:
  QuasiNewtonOperator(QNKind kind, int dim, int memory = 5, double scale = 1.0, double max_norm = 1e4)
      : kind_(kind), dim_(dim), memory_(memory), scale_(scale), max_norm_(max_norm) {
    require(dim > 0, "QuasiNewtonOperator: dimension must be positive");
    require(memory > 0, "QuasiNewtonOperator: memory must be positive");
    require(scale > 0.0, "QuasiNewtonOperator: scale must be positive");
  }

  QNKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int memory() const { return memory_; }
  double scale() const { return scale_; }
  std::size_t size() const { return pairs_.size(); }
  int resets() const { return resets_; }

  Vector apply(const Vector& v) const {
    require(v.size() == dim_, "QuasiNewtonOperator::apply: dimension mismatch");
    Vector out = scale_ * v;
    for (const auto& t : terms_) {
      if (kind_ == QNKind::LBFGS) {
        out += t.b.dot(v) * t.b - t.a.dot(v) * t.a;
      } else {
        out += (t.a.dot(v) / t.denom) * t.a;
      }
    }
    return out;
  }

  /// Returns true if the pair passed the curvature / denominator guard and was stored.
  bool update(const Vector& s, const Vector& y) {
    require(s.size() == dim_ && y.size() == dim_, "QuasiNewtonOperator::update: dimension mismatch");
    require(s.norm() > 0.0, "QuasiNewtonOperator::update: zero step");
    if (kind_ == QNKind::LBFGS) {
      const double sy = s.dot(y);
      if (!(sy >= kGuard * s.norm() * y.norm()) || sy <= 0.0) return false;
    } else {
      const Vector r = y - apply(s);
      if (!(std::abs(s.dot(r)) >= kGuard * s.norm() * r.norm()) || r.norm() == 0.0) return false;
    }

    auto saved_pairs = pairs_;
    auto saved_terms = terms_;
    const double saved_scale = scale_;

    pairs_.push_back({s, y});
    if (static_cast<int>(pairs_.size()) > memory_) pairs_.pop_front();
    if (kind_ == QNKind::LBFGS) scale_ = y.squaredNorm() / s.dot(y);
    if (!rebuild()) {
      pairs_ = std::move(saved_pairs);
      terms_ = std::move(saved_terms);
      scale_ = saved_scale;
      return false;
    }
    if (norm_bound() > max_norm_) reset();
    return true;
  }

  void reset() {
    pairs_.clear();
    terms_.clear();
    ++resets_;
  }

  /// Upper bound on ||B||_2: 1.1 times the largest ||Bv|| seen over 20 power
  /// iterations from a fixed start vector.
  double norm_bound() const {
    if (terms_.empty()) return scale_ * 11.0 / 10.0;
    Vector v(dim_);
    for (int i = 0; i < dim_; ++i) v[i] = 1.0 + 0.5 * std::sin(1.0 + i);
    v.normalize();
    double est = 0.0;
    for (int it = 0; it < 20; ++it) {
      Vector w = apply(v);
      const double nw = w.norm();
      est = std::max(est, nw);
      if (nw == 0.0) break;
      v = w / nw;
    }
    return est * 11.0 / 10.0;
  }

  Matrix dense() const {
    Matrix B(dim_, dim_);
    Vector e = Vector::Zero(dim_);
    for (int j = 0; j < dim_; ++j) {
      e[j] = 1.0;
      B.col(j) = apply(e);
      e[j] = 0.0;
    }
    return B;
  }

 private:
  static constexpr double kGuard = 1e-8;

  struct Pair {
    Vector s, y;
  };
  // LBFGS: a = B_i s / sqrt(s'B_i s), b = y / sqrt(y's).  LSR1: a = y - B_i s, denom = a's.
  struct Term {
    Vector a, b;
    double denom = 1.0;
  };

  bool rebuild() {
    terms_.clear();
    std::deque<Pair> kept;
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const auto& [s, y] = pairs_[i];
      const bool newest = i + 1 == pairs_.size();
      const Vector Bs = apply(s);
      Term t;
      bool ok = false;
      if (kind_ == QNKind::LBFGS) {
        const double sBs = s.dot(Bs);
        const double sy = s.dot(y);
        ok = sBs > 0.0 && sy > 0.0;
        if (ok) {
          t.a = Bs / std::sqrt(sBs);
          t.b = y / std::sqrt(sy);
        }
      } else {
        t.a = y - Bs;
        t.denom = t.a.dot(s);
        ok = std::abs(t.denom) >= kGuard * s.norm() * t.a.norm() && t.a.norm() > 0.0;
      }
      if (ok) {
        terms_.push_back(std::move(t));
        kept.push_back(pairs_[i]);
      } else if (newest) {
        return false;
      }
    }
    pairs_ = std::move(kept);
    return true;
  }

  QNKind kind_;
  int dim_;
  int memory_;
  double scale_;
  double max_norm_;
  int resets_ = 0;
  std::deque<Pair> pairs_;
  std::vector<Term> terms_;
};

/// B = 0.
struct ZeroOperator {
  int n = 0;
  Vector apply(const Vector& v) const { return Vector::Zero(v.size()); }
  double norm_bound() const { return 0.0; }
};

/// Explicit symmetric matrix; the norm bound is the exact spectral norm.
class DenseOperator {
 public:
  explicit DenseOperator(Matrix B) : B_(std::move(B)) {
    require(B_.rows() == B_.cols(), "DenseOperator: matrix must be square");
    Eigen::SelfAdjointEigenSolver<Matrix> es(B_, Eigen::EigenvaluesOnly);
    norm_ = es.eigenvalues().cwiseAbs().maxCoeff();
    lambda_min_ = es.eigenvalues().minCoeff();
  }
  Vector apply(const Vector& v) const { return B_ * v; }
  double norm_bound() const { return norm_; }
  double lambda_min() const { return lambda_min_; }
  const Matrix& matrix() const { return B_; }

 private:
  Matrix B_;
  double norm_ = 0.0;
  double lambda_min_ = 0.0;
};

}  // namespace nsreg
