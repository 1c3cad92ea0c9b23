#include "lqmfg/fbsolver.hpp"

#include <cmath>
#include <sstream>

#include "lqmfg/csv.hpp"
#include "lqmfg/errors.hpp"
#include "lqmfg/linear_bvp.hpp"
#include "lqmfg/odecore.hpp"

namespace lqmfg {

namespace {

void require_breakpoints_on_grid(const ProblemSpec& spec, const TimeGrid& grid) {
  if (grid.end() != spec.T) {
    throw DimensionMismatch("grid does not span the problem horizon");
  }
  for (double b : spec.breakpoints()) {
    if (!grid.index_of(b)) {
      throw DimensionMismatch("schedule breakpoint is not a grid node");
    }
  }
}

Matrix block2(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d) {
  Matrix out(a.rows() + c.rows(), a.cols() + b.cols());
  out << a, b, c, d;
  return out;
}

void split(const VectorPath& y, Eigen::Index n, VectorPath& xi, VectorPath& eta) {
  xi.resize(y.size());
  eta.resize(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    xi[k] = y[k].head(n);
    eta[k] = y[k].tail(n);
  }
}

// Boundary and ODE residual of (ξ, η) against the equilibrium system.
void fill_residuals(const ProblemSpec& spec, FBSolution& sol) {
  const Eigen::Index n = spec.n;
  const Matrix C = spec.QT + spec.effective_S_terminal();
  sol.boundary_residual = (sol.eta.back() - C * sol.xi.back()).norm();
  const auto H = sample(equilibrium_generator(spec), sol.grid, 2 * n, 2 * n);
  VectorPath y(sol.xi.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    y[k].resize(2 * n);
    y[k] << sol.xi[k], sol.eta[k];
  }
  sol.ode_residual = ode_residual(
      sol.grid, y, [&](std::size_t k, const Vector& v) -> Vector { return H[k] * v; },
      breakpoint_nodes(spec, sol.grid));
}

}  // namespace

Schedule equilibrium_generator(const ProblemSpec& spec) {
  return derived_schedule(spec, [](const CoefficientsAt& c) {
    return block2(c.A + c.Abar, -c.G, -(c.Q + c.Scal), -c.A.transpose());
  });
}

FBSolution solve_newric_shooting(const ProblemSpec& spec, const TimeGrid& grid) {
  require_valid(spec);
  require_breakpoints_on_grid(spec, grid);
  LinearBvp bvp(equilibrium_generator(spec), grid,
                spec.QT + spec.effective_S_terminal());
  FBSolution sol{grid, {}, {}};
  split(bvp.solve(spec.x0_mean), spec.n, sol.xi, sol.eta);
  sol.condition = bvp.condition();
  fill_residuals(spec, sol);
  return sol;
}

Matrix transition_matrix(const ProblemSpec& spec, double t) {
  return propagator(equilibrium_generator(spec), 0.0, t);
}

ScanReport existence_scan(const ProblemSpec& spec, double t_max,
                          std::size_t steps) {
  if (!(t_max > 0.0) || steps == 0) throw Error("existence_scan: empty scan range");
  const Schedule H = equilibrium_generator(spec);
  const Eigen::Index n = spec.n;
  ScanReport out{TimeGrid(t_max, steps), {}, {}, {}};
  out.det22.reserve(out.grid.size());
  out.det21.reserve(out.grid.size());
  for (std::size_t k = 0; k < out.grid.size(); ++k) {
    const Matrix phi = propagator(H, 0.0, out.grid[k]);
    out.det22.push_back(phi.block(n, n, n, n).determinant());
    out.det21.push_back(phi.block(n, 0, n, n).determinant());
  }
  for (std::size_t k = 0; k + 1 < out.grid.size(); ++k) {
    const double a = out.det22[k], b = out.det22[k + 1];
    if ((a > 0 && b <= 0) || (a < 0 && b >= 0)) {
      // A zero exactly on a node is reported once, by the bracket it ends.
      if (a != 0.0) out.sign_change_brackets.emplace_back(out.grid[k], out.grid[k + 1]);
    }
  }
  return out;
}

double refine_singular_horizon(const ProblemSpec& spec,
                               std::pair<double, double> bracket, double tol) {
  const Schedule H = equilibrium_generator(spec);
  const Eigen::Index n = spec.n;
  auto det22 = [&](double t) {
    return propagator(H, 0.0, t).block(n, n, n, n).determinant();
  };
  double lo = bracket.first, hi = bracket.second;
  double flo = det22(lo), fhi = det22(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) {
    throw Error("refine_singular_horizon: det Φ²² does not change sign on bracket");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = det22(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double q_weighted_norm(const SampledCoefficients& c, const VectorPath& z) {
  const double h = c.grid.step();
  double integral = 0.0;
  // Per step with the step's weight at both ends: exact per piece.
  for (std::size_t k = 0; k + 1 < z.size(); ++k) {
    integral += 0.5 * h * (z[k].dot(c.Q[k] * z[k]) + z[k + 1].dot(c.Q[k] * z[k + 1]));
  }
  const double terminal = z.back().dot(c.QT * z.back());
  return std::sqrt(std::max(0.0, terminal + integral));
}

FBSolution fixed_point_iterate(const ProblemSpec& spec, const TimeGrid& grid,
                               double tol, int max_iter) {
  require_valid(spec);
  require_breakpoints_on_grid(spec, grid);
  if (max_iter < 1) throw Error("fixed_point_iterate: max_iter must be positive");
  const Eigen::Index n = spec.n;
  const SampledCoefficients c = sample_coefficients(spec, grid);
  const Schedule H0 = derived_schedule(spec, [](const CoefficientsAt& a) {
    return block2(a.A, -a.G, -a.Q, -a.A.transpose());
  });
  // Inner problem: classical LQ system with terminal operator Q_T.
  LinearBvp inner(H0, grid, spec.QT);
  const auto breaks = breakpoint_nodes(spec, grid);

  bool decoupled = c.ScalT.isZero(0.0);
  for (std::size_t k = 0; k < grid.size() && decoupled; ++k) {
    decoupled = c.Abar[k].isZero(0.0) && c.Scal[k].isZero(0.0);
  }

  VectorPath z(grid.size(), Vector::Zero(n));
  double prev_sup = std::numeric_limits<double>::quiet_NaN();
  double ratio = std::numeric_limits<double>::quiet_NaN();
  const double scale = 1.0 + spec.x0_mean.norm();
  for (int it = 1; it <= max_iter; ++it) {
    GridInterpolant zi(grid, z, breaks);
    auto source = [&](double t, std::size_t k) -> Vector {
      const Vector zt = zi(t, k);
      Vector f(2 * n);
      f << c.Abar[k] * zt, -c.Scal[k] * zt;
      return f;
    };
    const Vector d = -c.ScalT * z.back();
    FBSolution sol{grid, {}, {}};
    split(inner.solve(spec.x0_mean, d, source), n, sol.xi, sol.eta);

    VectorPath diff(grid.size());
    double sup = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      diff[k] = sol.xi[k] - z[k];
      sup = std::max(sup, diff[k].cwiseAbs().maxCoeff());
    }
    const double qn = q_weighted_norm(c, diff);
    if (it > 1 && prev_sup > 0.0) ratio = sup / prev_sup;
    prev_sup = sup;

    if (!std::isfinite(sup) || sup > 1e12 * scale) {
      std::ostringstream msg;
      msg << "fixed-point iterates diverge after " << it
          << " iterations (contraction ratio estimate " << ratio << ")";
      throw NoConvergence(it, ratio, msg.str());
    }
    if ((qn < tol && sup < tol) || decoupled) {
      sol.iterations = it;
      sol.contraction_ratio = ratio;
      fill_residuals(spec, sol);
      return sol;
    }
    z = std::move(sol.xi);
  }
  std::ostringstream msg;
  msg << "fixed-point iteration did not converge in " << max_iter
      << " iterations (contraction ratio estimate " << ratio << ")";
  throw NoConvergence(max_iter, ratio, msg.str());
}

FeedbackLaw equilibrium_control_law(const ProblemSpec& spec,
                                    const FBSolution& fb,
                                    const std::vector<Matrix>& Xi) {
  if (Xi.size() != fb.grid.size() || fb.xi.size() != fb.grid.size() ||
      fb.eta.size() != fb.grid.size()) {
    throw DimensionMismatch("equilibrium_control_law: grid mismatch between inputs");
  }
  const SampledCoefficients c = sample_coefficients(spec, fb.grid);
  FeedbackLaw law{fb.grid, {}, {}, {}, fb.xi};
  law.gain.reserve(fb.grid.size());
  for (std::size_t k = 0; k < fb.grid.size(); ++k) {
    const Matrix RB = c.Rinv[k] * c.B[k].transpose();
    law.k.push_back(fb.eta[k] - Xi[k] * fb.xi[k]);
    law.gain.push_back(RB * Xi[k]);
    law.offset.push_back(RB * law.k.back());
  }
  return law;
}

void write_csv(std::ostream& out, const FBSolution& sol) {
  const Eigen::Index n = sol.xi.empty() ? 0 : sol.xi[0].size();
  {
    CsvRow row(out);
    row << "t";
    for (Eigen::Index i = 1; i <= n; ++i) row << "xi_" + std::to_string(i);
    for (Eigen::Index i = 1; i <= n; ++i) row << "eta_" + std::to_string(i);
  }
  for (std::size_t k = 0; k < sol.xi.size(); ++k) {
    CsvRow row(out);
    row << sol.grid[k];
    for (Eigen::Index i = 0; i < n; ++i) row << sol.xi[k](i);
    for (Eigen::Index i = 0; i < n; ++i) row << sol.eta[k](i);
  }
}

void write_csv(std::ostream& out, const ScanReport& scan) {
  out << "t,det_phi22,det_phi21\n";
  for (std::size_t k = 0; k < scan.det22.size(); ++k) {
    CsvRow(out) << scan.grid[k] << scan.det22[k] << scan.det21[k];
  }
}

}  // namespace lqmfg
