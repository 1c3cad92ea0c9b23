#include "lqmfg/riccati.hpp"

#include <cmath>
#include <sstream>

#include "lqmfg/csv.hpp"
#include "lqmfg/errors.hpp"
#include "lqmfg/fbsolver.hpp"
#include "lqmfg/linear_bvp.hpp"
#include "lqmfg/odecore.hpp"

namespace lqmfg {

namespace {

RiccatiPath from_trajectory(Trajectory traj) {
  return RiccatiPath{traj.grid, std::move(traj.samples), std::nullopt, traj.blow_up};
}

}  // namespace

RiccatiPath solve_symmetric(const ProblemSpec& spec, const TimeGrid& grid,
                            const VectorPath& z) {
  if (z.size() != grid.size()) {
    throw DimensionMismatch("solve_symmetric: z is not sampled on the grid");
  }
  const Eigen::Index n = spec.n;
  const SampledCoefficients c = sample_coefficients(spec, grid);
  const GridInterpolant zi(grid, z, breakpoint_nodes(spec, grid));
  // State [Ξ | ζ] as one n × (n+1) matrix.
  Field field = [&](double t, std::size_t k, const Matrix& y) -> Matrix {
    const auto X = y.leftCols(n);
    const auto zeta = y.col(n);
    const Matrix XG = X * c.G[k];
    Matrix out(n, n + 1);
    out.leftCols(n) = -X * c.A[k] - c.A[k].transpose() * X + XG * X -
                      (c.Q[k] + c.Qbar[k]);
    out.col(n) = -c.A[k].transpose() * zeta + XG * zeta +
                 (c.Qbar[k] * c.S[k] - X * c.Abar[k]) * zi(t, k);
    return out;
  };
  Matrix terminal(n, n + 1);
  terminal.leftCols(n) = spec.QT + spec.QbarT;
  terminal.col(n) = -spec.QbarT * spec.ST * z.back();

  Trajectory traj = rk4_integrate(field, terminal, grid, Direction::kBackward,
                                  kBlowUpThreshold);
  RiccatiPath out{grid, {}, VectorPath(grid.size()), traj.blow_up};
  out.gamma.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.gamma.push_back(traj.samples[k].leftCols(n));
    (*out.aux)[k] = traj.samples[k].col(n);
  }
  return out;
}

RiccatiPath solve_nonsymmetric_radon(const ProblemSpec& spec, const TimeGrid& grid) {
  const Eigen::Index n = spec.n;
  const Schedule H = equilibrium_generator(spec);
  Matrix boundary(n, 2 * n);
  boundary << spec.QT + spec.effective_S_terminal(), -Matrix::Identity(n, n);
  RiccatiPath out{grid, std::vector<Matrix>(grid.size()), std::nullopt, std::nullopt};
  for (std::size_t k = grid.size(); k-- > 0;) {
    const Matrix Y = boundary * propagator(H, grid[k], grid.end());
    const Matrix U = Y.leftCols(n), V = Y.rightCols(n);
    const double cond = boundary_condition(Y, V);
    if (!(cond <= kSingularCondition)) {
      std::ostringstream msg;
      msg << "Radon boundary operator is singular at t=" << grid[k]
          << " (condition number " << cond << ")";
      throw BoundaryOperatorSingular(grid[k], cond, msg.str());
    }
    out.gamma[k] = -V.partialPivLu().solve(U);
  }
  return out;
}

RiccatiPath solve_nonsymmetric_direct(const ProblemSpec& spec, const TimeGrid& grid) {
  const SampledCoefficients c = sample_coefficients(spec, grid);
  Field field = [&](double, std::size_t k, const Matrix& g) -> Matrix {
    return -g * (c.A[k] + c.Abar[k]) - c.A[k].transpose() * g + g * c.G[k] * g -
           (c.Q[k] + c.Scal[k]);
  };
  return from_trajectory(rk4_integrate(field, spec.QT + c.ScalT, grid,
                                       Direction::kBackward, kBlowUpThreshold));
}

RiccatiPath solve_1d_closed_form(double a, double abar, double b, double r,
                                 double q_plus_s, double qT_plus_sT, double T,
                                 const TimeGrid& grid) {
  if (!(r > 0.0)) throw InvalidProblem("solve_1d_closed_form: r must be positive");
  if (std::abs(grid.end() - T) > 1e-12 * std::max(1.0, T)) {
    throw DimensionMismatch("solve_1d_closed_form: grid does not span [0, T]");
  }
  const double k = 2.0 * a + abar;
  const double c = b * b / r;
  const double q = q_plus_s, g = qT_plus_sT;
  RiccatiPath out{grid, std::vector<Matrix>(grid.size()), std::nullopt, std::nullopt};
  auto put = [&](std::size_t i, double v) { out.gamma[i] = Matrix::Constant(1, 1, v); };

  if (c == 0.0) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double tau = T - grid[i];
      if (k == 0.0) {
        put(i, q * tau + g);
      } else {
        // (g + q/k) e^{kτ} − q/k, written to stay accurate for small kτ.
        put(i, g * std::exp(k * tau) + q * std::expm1(k * tau) / k);
      }
    }
    return out;
  }

  const double D = k * k + 4.0 * c * q;
  if (!(D > 0.0)) {
    throw DistinctRootsViolated(
        "characteristic quadratic has no two distinct real roots (alpha + beta = 0)");
  }
  const double sq = std::sqrt(D);
  const double alpha = (k + sq) / (2.0 * c);
  const double beta = -(k - sq) / (2.0 * c);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = grid.size(); i-- > 0;) {
    const double tau = T - grid[i];
    if (g + beta == 0.0) {
      put(i, -beta);
      continue;
    }
    const double e = std::exp(-c * (alpha + beta) * tau);
    const double denom = (g + beta) - (g - alpha) * e;
    if (!(denom > 0.0)) {
      out.blow_up = i;
      for (std::size_t j = 0; j <= i; ++j) put(j, nan);
      break;
    }
    const double value = alpha + (alpha + beta) * (g - alpha) * e / denom;
    if (std::abs(value) > kBlowUpThreshold) {
      out.blow_up = i;
      for (std::size_t j = 0; j <= i; ++j) put(j, nan);
      break;
    }
    put(i, value);
  }
  return out;
}

void write_csv(std::ostream& out, const RiccatiPath& path) {
  const Eigen::Index n = path.gamma.empty() ? 0 : path.gamma[0].rows();
  const Eigen::Index nc = path.gamma.empty() ? 0 : path.gamma[0].cols();
  {
    CsvRow row(out);
    row << "t";
    for (Eigen::Index i = 1; i <= n; ++i) {
      for (Eigen::Index j = 1; j <= nc; ++j) {
        row << "gamma_" + std::to_string(i) + std::to_string(j);
      }
    }
    if (path.aux) {
      for (Eigen::Index i = 1; i <= n; ++i) row << "zeta_" + std::to_string(i);
    }
  }
  for (std::size_t k = 0; k < path.gamma.size(); ++k) {
    CsvRow row(out);
    row << path.grid[k];
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < nc; ++j) row << path.gamma[k](i, j);
    }
    if (path.aux) {
      for (Eigen::Index i = 0; i < n; ++i) row << (*path.aux)[k](i);
    }
  }
}

}  // namespace lqmfg
