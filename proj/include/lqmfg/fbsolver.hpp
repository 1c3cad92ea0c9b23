#pragma once

#include <cstddef>
#include <limits>
#include <ostream>
#include <utility>
#include <vector>

#include "lqmfg/coeffs.hpp"

namespace lqmfg {

/// Mean state ξ = E[y] and mean adjoint η = E[p] of the equilibrium.
struct FBSolution {
  TimeGrid grid;
  VectorPath xi;
  VectorPath eta;
  /// ‖η_T − (Q_T + 𝒮_T) ξ_T‖.
  double boundary_residual = 0.0;
  /// Largest defect of the equilibrium ODE measured by finite differences.
  double ode_residual = 0.0;
  /// Condition number of the shooting boundary operator (shooting only).
  double condition = std::numeric_limits<double>::quiet_NaN();
  /// Fixed-point iteration count and last ratio of successive differences.
  int iterations = 0;
  double contraction_ratio = std::numeric_limits<double>::quiet_NaN();
};

struct ScanReport {
  TimeGrid grid;
  std::vector<double> det22;
  std::vector<double> det21;
  /// Intervals [t_k, t_{k+1}] on which det Φ²² changes sign.
  std::vector<std::pair<double, double>> sign_change_brackets;
};

/// Generator H of d(ξ, η)/dt = H (ξ, η):
/// [[A+Ā, −BR⁻¹B*], [−(Q+𝒮), −A*]].
Schedule equilibrium_generator(const ProblemSpec& spec);

/// Solves the equilibrium system by shooting on η₀. Throws
/// SingularShootingMatrix when the boundary operator is numerically singular.
FBSolution solve_newric_shooting(const ProblemSpec& spec, const TimeGrid& grid);

/// Φ(t, 0) of the equilibrium system.
Matrix transition_matrix(const ProblemSpec& spec, double t);

/// Tabulates det Φ²²_t and det Φ²¹_t on a uniform grid over [0, t_max].
ScanReport existence_scan(const ProblemSpec& spec, double t_max,
                          std::size_t steps);

/// Bisects a sign-change bracket of det Φ²²_t down to width `tol`; returns
/// the midpoint.
double refine_singular_horizon(const ProblemSpec& spec,
                               std::pair<double, double> bracket,
                               double tol = 1e-6);

/// Iterates z ↦ ξ from z ≡ 0, where ξ solves the control problem with the
/// mean field frozen at z. Stops once both the Q-weighted norm and the sup
/// norm of ξ − z fall below `tol`. Throws NoConvergence after `max_iter`
/// iterations or when the iterates diverge.
FBSolution fixed_point_iterate(const ProblemSpec& spec, const TimeGrid& grid,
                               double tol = 1e-10, int max_iter = 500);

/// The ⟨·,·⟩_Q norm: sqrt(z_T* Q_T z_T + ∫ z* Q z dt) (trapezoid).
double q_weighted_norm(const SampledCoefficients& c, const VectorPath& z);

/// Affine feedback u_t(y) = −R⁻¹B*(Ξ_t y + k_t), sampled on the grid.
struct FeedbackLaw {
  TimeGrid grid;
  std::vector<Matrix> gain;  // R⁻¹B*Ξ
  VectorPath offset;         // R⁻¹B*k
  VectorPath k;              // η − Ξξ
  VectorPath xi;             // mean-field path
};

/// Builds the equilibrium feedback from a solved mean system and the
/// symmetric Riccati path Ξ.
FeedbackLaw equilibrium_control_law(const ProblemSpec& spec,
                                    const FBSolution& fb,
                                    const std::vector<Matrix>& Xi);

/// `t,xi_1..xi_n,eta_1..eta_n`.
void write_csv(std::ostream& out, const FBSolution& sol);
/// `t,det_phi22,det_phi21`.
void write_csv(std::ostream& out, const ScanReport& scan);

}  // namespace lqmfg
