#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "lqmfg/coeffs.hpp"

namespace lqmfg {

/// Mean state ȳ and mean adjoint p̄ of the mean-field-type control problem.
struct MFTypeSolution {
  TimeGrid grid;
  VectorPath ybar;
  VectorPath pbar;
  /// ‖p̄_T − (Q_T + (I−S_T)*Q̄_T(I−S_T)) ȳ_T‖.
  double boundary_residual = 0.0;
};

/// Solves d(ȳ, p̄)/dt = [[A+Ā, −BR⁻¹B*], [−(Q + (I−S)*Q̄(I−S)), −(A+Ā)*]](ȳ, p̄)
/// with ȳ_0 = E[x₀] by shooting. A singular boundary operator contradicts the
/// problem's well-posedness and is reported as lqmfg::Error.
MFTypeSolution solve_mftype_mean(const ProblemSpec& spec, const TimeGrid& grid);

/// Scalar constant-coefficient comparison of the equilibrium and the
/// mean-field-type optimum with S = I.
struct ComparisonParams {
  double a = 0.0;
  double abar = 0.0;
  double b = 1.0;
  double r = 1.0;
  double q = 0.0;
  double qT = 1.0;
  double T = 1.0;
  double x0 = 1.0;
  std::size_t steps = kDefaultSteps;
};

struct ComparisonResult {
  double psi1_T = 0.0;
  double psi2_T = 0.0;
  /// (1 − e^{−(2A+Ā)T})/(2A+Ā) and e^{ĀT}(1 − e^{−(2A+2Ā)T})/(2A+2Ā);
  /// present only when q = 0, qT ≠ 0, b ≠ 0, x₀ ≠ 0 and both denominators
  /// are nonzero.
  std::optional<double> lhs, rhs;
  /// |ψ₁(T) − ψ₂(T)| > 1e-7 (1 + |ψ₁(T)|), from the shooting solutions.
  bool differ = false;
  /// Verdict of the closed-form criterion, when evaluated.
  std::optional<bool> closed_form_differ;
  bool consistent() const { return !closed_form_differ || *closed_form_differ == differ; }
  std::string to_text() const;
};

ComparisonResult compare_mfg_mftype(const ComparisonParams& p);

/// `t,ybar_1..ybar_n,pbar_1..pbar_n`.
void write_csv(std::ostream& out, const MFTypeSolution& sol);

}  // namespace lqmfg
