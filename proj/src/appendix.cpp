#include "lqmfg/appendix.hpp"

#include <algorithm>
#include <cmath>

#include "lqmfg/errors.hpp"
#include "lqmfg/linear_bvp.hpp"
#include "lqmfg/odecore.hpp"

namespace lqmfg {

namespace {

void require_params(const AppendixParams& p, const TimeGrid& grid) {
  if (!(p.r > 0.0)) throw InvalidProblem("appendix model: r must be positive");
  if (!(p.T > 0.0)) throw InvalidProblem("appendix model: T must be positive");
  if (std::abs(grid.end() - p.T) > 1e-12 * std::max(1.0, p.T)) {
    throw DimensionMismatch("appendix model: grid does not span [0, T]");
  }
}

VectorPath as_path(const std::vector<double>& a, const std::vector<double>& b) {
  VectorPath out(a.size(), Vector(2));
  for (std::size_t k = 0; k < a.size(); ++k) out[k] << a[k], b[k];
  return out;
}

}  // namespace

HcmRiccati appendix_hcm_riccati(const AppendixParams& p, const TimeGrid& grid) {
  require_params(p, grid);
  const double c = p.b * p.b / p.r;
  // State (Π, J): dΠ/dt = −2aΠ + cΠ² − 1, dJ/dt = −(a − cΠ).
  Field field = [&](double, std::size_t, const Matrix& y) -> Matrix {
    const double pi = y(0, 0);
    Matrix out(1, 2);
    out << -2.0 * p.a * pi + c * pi * pi - 1.0, -(p.a - c * pi);
    return out;
  };
  Trajectory traj = rk4_integrate(field, Matrix::Zero(1, 2), grid,
                                  Direction::kBackward, 1e12);
  require_finite(traj, "HCM Riccati equation");
  HcmRiccati out{grid, {}, {}};
  for (const auto& y : traj.samples) {
    out.Pi.push_back(y(0, 0));
    out.J.push_back(y(0, 1));
  }
  return out;
}

std::vector<double> appendix_hcm_s(const AppendixParams& p, const HcmRiccati& hcm,
                                   const std::vector<double>& zbar) {
  const TimeGrid& grid = hcm.grid;
  if (zbar.size() != grid.size()) {
    throw DimensionMismatch("appendix_hcm_s: z̄ is not sampled on the grid");
  }
  const double c = p.b * p.b / p.r;
  VectorPath zp(grid.size(), Vector(1));
  for (std::size_t k = 0; k < grid.size(); ++k) zp[k](0) = zbar[k];
  const GridInterpolant zi(grid, zp);
  // Π is recomputed jointly so its stage values are exact RK4 stages.
  Field field = [&](double t, std::size_t k, const Matrix& y) -> Matrix {
    const double pi = y(0, 0), s = y(0, 1);
    const double z = zi(t, k)(0);
    Matrix out(1, 2);
    out << -2.0 * p.a * pi + c * pi * pi - 1.0,
        -(p.a - c * pi) * s - p.alpha * pi * z + p.gamma * (z + p.eta);
    return out;
  };
  Trajectory traj = rk4_integrate(field, Matrix::Zero(1, 2), grid,
                                  Direction::kBackward, 1e12);
  require_finite(traj, "HCM offset equation");
  std::vector<double> s;
  for (const auto& y : traj.samples) s.push_back(y(0, 1));
  return s;
}

HcmCondition appendix_hcm_condition(const AppendixParams& p, const TimeGrid& grid) {
  const HcmRiccati hcm = appendix_hcm_riccati(p, grid);
  const double c = p.b * p.b / p.r;
  const double h = grid.step();
  const std::size_t K = grid.steps();
  const double abs_alpha = std::abs(p.alpha), abs_gamma = std::abs(p.gamma);

  // Inner integral I_k = ∫_{t_k}^T Φ(t_k, τ) g(τ) dτ, g = |α|Π + |γ|, by a
  // backward trapezoid recursion; w_k = |α| + c I_k.
  std::vector<double> w(K + 1);
  double I = 0.0;
  w[K] = abs_alpha;
  for (std::size_t k = K; k-- > 0;) {
    const double e = hcm.Phi(k, k + 1);
    const double gk = abs_alpha * hcm.Pi[k] + abs_gamma;
    const double gk1 = abs_alpha * hcm.Pi[k + 1] + abs_gamma;
    I = e * (I + 0.5 * h * gk1) + 0.5 * h * gk;
    w[k] = abs_alpha + c * I;
  }
  // Outer integral L_j = ∫_0^{t_j} Φ(σ, t_j) w(σ) dσ, forward recursion.
  HcmCondition out;
  double L = 0.0;
  for (std::size_t j = 0; j < K; ++j) {
    const double e = hcm.Phi(j, j + 1);
    L = e * L + 0.5 * h * (w[j] * e + w[j + 1]);
    out.lhs = std::max(out.lhs, L);
  }
  out.satisfied = out.lhs < 1.0;

  if (p.a == 0.0 && p.alpha == 0.0 && p.r == 1.0 && p.b > 0.0) {
    out.closed_form_applicable = true;
    const double b = p.b, T = p.T;
    double best = 0.0;
    for (std::size_t k = 0; k <= K; ++k) {
      const double t = grid[k];
      best = std::max(best, 1.0 - std::exp(-b * t) - 0.5 * std::exp(-b * (T - t)) +
                                0.5 * std::exp(-b * (T + t)));
    }
    out.closed_form_sup = abs_gamma * best;
    out.simplified = abs_gamma * (1.0 - std::exp(-b * T));
    out.simplified_satisfied = out.simplified < 1.0;
  }
  return out;
}

double bsyy_closed_form_P(const AppendixParams& p, double t) {
  const double c = p.b * p.b / p.r;
  const double k = 2.0 * p.a + p.alpha;
  const double D = k * k + 4.0 * c * (1.0 - p.gamma);
  if (c == 0.0 || !(D > 0.0)) {
    throw DistinctRootsViolated("BSYY closed form needs b != 0 and distinct real roots");
  }
  const double s1 = (k + std::sqrt(D)) / (2.0 * c);
  const double s2 = (k - std::sqrt(D)) / (2.0 * c);
  // Divided through by E = exp((ς₁−ς₂)(b²/r)(T−t)) to avoid overflow.
  const double inv_e = std::exp(-(s1 - s2) * c * (p.T - t));
  return (1.0 - p.gamma) / c * (1.0 - inv_e) / (s1 * inv_e - s2);
}

BsyyResult appendix_bsyy(const AppendixParams& p, const TimeGrid& grid) {
  require_params(p, grid);
  const double c = p.b * p.b / p.r;
  const double k = 2.0 * p.a + p.alpha;
  BsyyResult out;
  out.grid = grid;
  out.gamma_condition = p.gamma <= 1.0;

  // State (P, ρ).
  Field field = [&](double, std::size_t, const Matrix& y) -> Matrix {
    const double P = y(0, 0), rho = y(0, 1);
    Matrix d(1, 2);
    d << -k * P + c * P * P - 1.0 + p.gamma, -(p.a - c * P) * rho + p.gamma * p.eta;
    return d;
  };
  Trajectory traj = rk4_integrate(field, Matrix::Zero(1, 2), grid,
                                  Direction::kBackward, 1e12);
  require_finite(traj, "BSYY Riccati equation");
  for (const auto& y : traj.samples) {
    out.P.push_back(y(0, 0));
    out.rho.push_back(y(0, 1));
  }

  const double D = k * k + 4.0 * c * (1.0 - p.gamma);
  if (c != 0.0 && D >= 0.0) {
    out.roots = std::make_pair((k + std::sqrt(D)) / (2.0 * c),
                               (k - std::sqrt(D)) / (2.0 * c));
  }
  if (c != 0.0 && D > 0.0 && out.gamma_condition) {
    double err = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      err = std::max(err, std::abs(out.P[i] - bsyy_closed_form_P(p, grid[i])));
    }
    out.closed_form_error = err;
    out.closed_form_ok = err <= 1e-7;
  }

  // Mean system: dz̄/dt = (a+α)z̄ − c(Pz̄ + ρ), z̄(0) = 0.
  const VectorPath pr = as_path(out.P, out.rho);
  const GridInterpolant pri(grid, pr);
  Field mean = [&](double t, std::size_t kk, const Matrix& y) -> Matrix {
    const Vector v = pri(t, kk);
    return Matrix::Constant(1, 1, (p.a + p.alpha) * y(0, 0) - c * (v(0) * y(0, 0) + v(1)));
  };
  Trajectory zt = rk4_integrate(mean, Matrix::Zero(1, 1), grid, Direction::kForward, 1e12);
  require_finite(zt, "BSYY mean system");
  VectorPath pbar(grid.size(), Vector(1));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.zbar.push_back(zt.samples[i](0, 0));
    out.pbar.push_back(out.P[i] * out.zbar[i] + out.rho[i]);
    pbar[i](0) = out.pbar[i];
  }
  out.mean_residual = ode_residual(
      grid, pbar,
      [&](std::size_t i, const Vector& v) -> Vector {
        return Vector::Constant(1, -(p.a * v(0) + (1.0 - p.gamma) * out.zbar[i] -
                                     p.gamma * p.eta));
      },
      {});
  return out;
}

}  // namespace lqmfg
