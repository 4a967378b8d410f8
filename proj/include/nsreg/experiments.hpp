#pragma once

// Problem generators: basis pursuit denoise (sparse least squares with an
// orthonormal-row sensing matrix) and parameter recovery for the
// FitzHugh-Nagumo neuron model.

#include "nsreg/core.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <memory>
#include <numbers>
#include <random>

namespace nsreg {

/// Seeded mt19937_64 with distribution code written out so draws are the
/// same on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  /// Standard normal by Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Basis pursuit denoise

struct BpdnInstance {
  Matrix A;  // m x n, orthonormal rows
  Vector b;
  Vector x_true;
  std::uint64_t seed = 0;
  double noise_std = 0.0;
};

/// A' is the thin-QR Q factor of a Gaussian n x m matrix; x_true has k
/// entries of +-1 at distinct uniform positions; b = A x_true + noise.
inline BpdnInstance gen_bpdn(std::uint64_t seed, int m = 200, int n = 512, int k = 10, double noise_std = 0.1) {
  require(m > 0 && n > 0 && m <= n, "gen_bpdn: need 0 < m <= n");
  require(k >= 0 && k <= n, "gen_bpdn: need 0 <= k <= n");
  require(noise_std >= 0.0, "gen_bpdn: noise_std must be >= 0");
  Rng rng(seed);
  Matrix G(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(G);
  const Matrix Q = qr.householderQ() * Matrix::Identity(n, m);

  BpdnInstance inst;
  inst.seed = seed;
  inst.noise_std = noise_std;
  inst.A = Q.transpose();

  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  inst.x_true = Vector::Zero(n);
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
    inst.x_true[idx[i]] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  }
  inst.b = inst.A * inst.x_true;
  for (int i = 0; i < m; ++i) inst.b[i] += noise_std * rng.normal();
  return inst;
}

/// scale * ||A'b||_inf.
inline double bpdn_lambda(const Matrix& A, const Vector& b, double scale = 0.1) {
  require(A.rows() == b.size(), "bpdn_lambda: dimension mismatch");
  const Vector c = A.transpose() * b;
  return c.size() == 0 ? 0.0 : scale * c.lpNorm<Eigen::Infinity>();
}

/// f(x) = 1/2 |Ax - b|^2.
inline SmoothOracle least_squares_oracle(Matrix A, Vector b) {
  auto data = std::make_shared<std::pair<Matrix, Vector>>(std::move(A), std::move(b));
  const int n = static_cast<int>(data->first.cols());
  return SmoothOracle(
      n, [data](const Vector& x) { return 0.5 * (data->first * x - data->second).squaredNorm(); },
      [data](const Vector& x) -> Vector { return data->first.transpose() * (data->first * x - data->second); });
}

inline SmoothOracle bpdn_oracle(const BpdnInstance& inst) { return least_squares_oracle(inst.A, inst.b); }

// ---------------------------------------------------------------------------
// FitzHugh-Nagumo

/// Raised when the ODE state stops being finite.
class IntegrationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using FhParams = std::array<double, 5>;

struct FhState {
  double v = 0.0;
  double w = 0.0;
};

/// dV/dt = (V - V^3/3 - W + x1) / x2,  dW/dt = x2 (x3 V - x4 W + x5).
inline FhState fh_rhs(const FhState& s, const FhParams& x) {
  require(x[1] != 0.0, "fh_rhs: x2 must be nonzero");
  return {(s.v - s.v * s.v * s.v / 3.0 - s.w + x[0]) / x[1], x[1] * (x[2] * s.v - x[3] * s.w + x[4])};
}

/// Van der Pol special case (x1 = x4 = x5 = 0).
inline FhState vdp_rhs(const FhState& s, double mu, double c) {
  return {(s.v - s.v * s.v * s.v / 3.0 - s.w) / mu, mu * (c * s.v)};
}

struct OdeInstance {
  double t0 = 0.0;
  double t1 = 20.0;
  double dt_obs = 0.2;
  double dt_int = 0.01;
  double v0 = 2.0;
  double w0 = 0.0;
  Vector b;
  FhParams x_true{0.0, 0.2, 1.0, 0.0, 0.0};
  std::uint64_t seed = 0;
  double noise_std = 0.0;

  int intervals() const { return static_cast<int>(std::lround((t1 - t0) / dt_obs)); }
  int substeps() const { return static_cast<int>(std::lround(dt_obs / dt_int)); }
  int samples() const { return intervals() + 1; }
};

inline FhParams to_params(const Vector& x) {
  require(x.size() == 5, "FitzHugh-Nagumo parameters must have 5 entries");
  return {x[0], x[1], x[2], x[3], x[4]};
}

namespace detail {

// State (V, W) followed by the 2 x 5 sensitivity matrix d(V, W)/dx, row-major.
using Augmented = std::array<double, 12>;

inline Augmented fh_augmented_rhs(const Augmented& z, const FhParams& x) {
  const double v = z[0], w = z[1];
  const double inv_b = 1.0 / x[1];
  const double core = v - v * v * v / 3.0 - w + x[0];
  const double lin = x[2] * v - x[3] * w + x[4];
  // state part shares fh_rhs arithmetic so F matches fh_simulate bit for bit
  const FhState d = fh_rhs({v, w}, x);
  Augmented out{};
  out[0] = d.v;
  out[1] = d.w;
  // state Jacobian
  const double dfv_dv = (1.0 - v * v) * inv_b;
  const double dfv_dw = -inv_b;
  const double dfw_dv = x[1] * x[2];
  const double dfw_dw = -x[1] * x[3];
  // parameter partials
  const double dfv_dx[5] = {inv_b, -core * inv_b * inv_b, 0.0, 0.0, 0.0};
  const double dfw_dx[5] = {0.0, lin, x[1] * v, -x[1] * w, x[1]};
  for (int i = 0; i < 5; ++i) {
    const double sv = z[2 + i], sw = z[7 + i];
    out[2 + i] = dfv_dv * sv + dfv_dw * sw + dfv_dx[i];
    out[7 + i] = dfw_dv * sv + dfw_dw * sw + dfw_dx[i];
  }
  return out;
}

/// One classical RK4 step of z' = rhs(z) on the first `active` components.
template <std::size_t N, class Rhs>
void rk4_step(std::array<double, N>& z, const Rhs& rhs, double h, std::size_t active = N) {
  auto axpy = [&](const std::array<double, N>& a, double c, const std::array<double, N>& k) {
    std::array<double, N> r = a;
    for (std::size_t i = 0; i < active; ++i) r[i] += c * k[i];
    return r;
  };
  const auto k1 = rhs(z);
  const auto k2 = rhs(axpy(z, 0.5 * h, k1));
  const auto k3 = rhs(axpy(z, 0.5 * h, k2));
  const auto k4 = rhs(axpy(z, h, k3));
  for (std::size_t i = 0; i < active; ++i) z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

inline void fh_rk4_step(Augmented& z, const FhParams& x, double h, bool with_sensitivity) {
  if (with_sensitivity) {
    rk4_step(z, [&](const Augmented& a) { return fh_augmented_rhs(a, x); }, h);
    return;
  }
  auto rhs = [&](const Augmented& a) {
    Augmented r{};
    const FhState d = fh_rhs({a[0], a[1]}, x);
    r[0] = d.v;
    r[1] = d.w;
    return r;
  };
  rk4_step(z, rhs, h, 2);
}

}  // namespace detail

/// Trajectory samples F = (v_1..v_N, w_1..w_N) and, optionally, the Jacobian
/// dF/dx from forward sensitivities integrated with the same RK4 steps.
struct FhSimulation {
  Vector F;
  Matrix J;  // 2N x 5, empty when sensitivities were not requested
};

inline FhSimulation fh_simulate_full(const FhParams& x, const OdeInstance& inst, bool with_sensitivity) {
  require(x[1] != 0.0, "fh_simulate: x2 must be nonzero");
  const int N = inst.samples();
  const int sub = inst.substeps();
  const double h = inst.dt_obs / sub;
  FhSimulation out;
  out.F.resize(2 * N);
  if (with_sensitivity) out.J = Matrix::Zero(2 * N, 5);
  detail::Augmented z{};
  z[0] = inst.v0;
  z[1] = inst.w0;
  auto record = [&](int i) {
    out.F[i] = z[0];
    out.F[N + i] = z[1];
    if (with_sensitivity) {
      for (int p = 0; p < 5; ++p) {
        out.J(i, p) = z[2 + p];
        out.J(N + i, p) = z[7 + p];
      }
    }
  };
  record(0);
  for (int i = 1; i < N; ++i) {
    for (int j = 0; j < sub; ++j) detail::fh_rk4_step(z, x, h, with_sensitivity);
    for (int c = 0; c < (with_sensitivity ? 12 : 2); ++c) {
      if (!std::isfinite(z[c])) throw IntegrationFailure("fh_simulate: state blew up before t = " + std::to_string(inst.t0 + i * inst.dt_obs));
    }
    record(i);
  }
  return out;
}

inline Vector fh_simulate(const FhParams& x, const OdeInstance& inst) { return fh_simulate_full(x, inst, false).F; }

/// Observations b = F(x_true) + noise on the [t0, t1] grid.
inline OdeInstance gen_fh(std::uint64_t seed, double noise_std = std::sqrt(0.1), double dt_int = 0.01) {
  OdeInstance inst;
  inst.seed = seed;
  inst.noise_std = noise_std;
  inst.dt_int = dt_int;
  inst.b = fh_simulate(inst.x_true, inst);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < inst.b.size(); ++i) inst.b[i] += noise_std * rng.normal();
  return inst;
}

/// f(x) = 1/2 |F(x) - b|^2 with gradient J(x)'(F(x) - b). A failed
/// integration gives f = +inf.
inline SmoothOracle fh_oracle(const OdeInstance& inst) {
  auto data = std::make_shared<OdeInstance>(inst);
  return SmoothOracle(
      5,
      [data](const Vector& x) {
        const FhParams p = to_params(x);
        if (p[1] == 0.0) return kInf;
        try {
          return 0.5 * (fh_simulate(p, *data) - data->b).squaredNorm();
        } catch (const IntegrationFailure&) {
          return kInf;
        }
      },
      [data](const Vector& x) -> Vector {
        const FhSimulation sim = fh_simulate_full(to_params(x), *data, true);
        return sim.J.transpose() * (sim.F - data->b);
      });
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json to_json(const BpdnInstance& inst) {
  nlohmann::json j;
  j["kind"] = "bpdn";
  j["seed"] = inst.seed;
  j["noise_std"] = inst.noise_std;
  j["rows"] = inst.A.rows();
  j["cols"] = inst.A.cols();
  std::vector<double> a;
  a.reserve(static_cast<std::size_t>(inst.A.size()));
  for (Eigen::Index i = 0; i < inst.A.rows(); ++i)
    for (Eigen::Index c = 0; c < inst.A.cols(); ++c) a.push_back(inst.A(i, c));
  j["A"] = std::move(a);
  j["b"] = vector_to_json(inst.b);
  j["x_true"] = vector_to_json(inst.x_true);
  return j;
}

inline BpdnInstance bpdn_from_json(const nlohmann::json& j) {
  if (j.at("kind") != "bpdn") throw std::runtime_error("instance JSON: expected kind \"bpdn\"");
  BpdnInstance inst;
  inst.seed = j.at("seed").get<std::uint64_t>();
  inst.noise_std = j.at("noise_std").get<double>();
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto a = j.at("A").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(a.size()) != rows * cols) throw std::runtime_error("instance JSON: A has wrong size");
  inst.A.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) inst.A(i, c) = a[static_cast<std::size_t>(i * cols + c)];
  inst.b = vector_from_json(j.at("b"));
  inst.x_true = vector_from_json(j.at("x_true"));
  if (inst.b.size() != rows || inst.x_true.size() != cols) throw std::runtime_error("instance JSON: dimension mismatch");
  return inst;
}

inline nlohmann::json to_json(const OdeInstance& inst) {
  nlohmann::json j;
  j["kind"] = "fh";
  j["seed"] = inst.seed;
  j["noise_std"] = inst.noise_std;
  j["t0"] = inst.t0;
  j["t1"] = inst.t1;
  j["dt_obs"] = inst.dt_obs;
  j["dt_int"] = inst.dt_int;
  j["v0"] = inst.v0;
  j["w0"] = inst.w0;
  j["x_true"] = inst.x_true;
  j["b"] = vector_to_json(inst.b);
  return j;
}

inline OdeInstance ode_from_json(const nlohmann::json& j) {
  if (j.at("kind") != "fh") throw std::runtime_error("instance JSON: expected kind \"fh\"");
  OdeInstance inst;
  inst.seed = j.at("seed").get<std::uint64_t>();
  inst.noise_std = j.at("noise_std").get<double>();
  inst.t0 = j.at("t0").get<double>();
  inst.t1 = j.at("t1").get<double>();
  inst.dt_obs = j.at("dt_obs").get<double>();
  inst.dt_int = j.at("dt_int").get<double>();
  inst.v0 = j.at("v0").get<double>();
  inst.w0 = j.at("w0").get<double>();
  inst.x_true = j.at("x_true").get<FhParams>();
  inst.b = vector_from_json(j.at("b"));
  if (inst.b.size() != 2 * inst.samples()) throw std::runtime_error("instance JSON: b has wrong length");
  return inst;
}

}  // namespace nsreg
