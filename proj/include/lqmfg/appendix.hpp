#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lqmfg/coeffs.hpp"

namespace lqmfg {

/// Scalar single-population model: dynamics dz = (az + bu + αz̄)dt + σdw,
/// running cost |z − γ(z̄ + η)|² + ru².
struct AppendixParams {
  double a = 0.0;
  double b = 1.0;
  double r = 1.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
  double T = 1.0;
};

/// Π solving dΠ/dt + 2aΠ − (b²/r)Π² + 1 = 0, Π_T = 0, with
/// J_t = ∫_t^T (a − (b²/r)Π) so that Φ(t, τ) = exp(J_t − J_τ).
struct HcmRiccati {
  TimeGrid grid;
  std::vector<double> Pi;
  std::vector<double> J;

  double Phi(std::size_t t, std::size_t tau) const { return std::exp(J[t] - J[tau]); }
};

HcmRiccati appendix_hcm_riccati(const AppendixParams& p, const TimeGrid& grid);

/// s solving ds/dt + (a − (b²/r)Π)s + αΠz̄ − γ(z̄ + η) = 0, s_T = 0, for a
/// mean path z̄ sampled on the grid.
std::vector<double> appendix_hcm_s(const AppendixParams& p, const HcmRiccati& hcm,
                                   const std::vector<double>& zbar);

struct HcmCondition {
  /// Numeric sup_t ∫_0^t Φ(σ,t){|α| + (b²/r)∫_σ^T Φ(σ,τ)(|α|Π_τ + |γ|)dτ}dσ.
  double lhs = 0.0;
  bool satisfied = false;
  /// For a = α = 0, r = 1: the quantity obtained by replacing bΠ by its
  /// upper bound 1, sup_t |γ|(1 − e^{−bt} − ½e^{−b(T−t)} + ½e^{−b(T+t)}),
  /// and its final form |γ|(1 − e^{−bT}). The sup form bounds `lhs` from
  /// below; the final form bounds the sup form from above.
  bool closed_form_applicable = false;
  double closed_form_sup = std::nan("");
  double simplified = std::nan("");
  bool simplified_satisfied = false;
};

HcmCondition appendix_hcm_condition(const AppendixParams& p, const TimeGrid& grid);

struct BsyyResult {
  TimeGrid grid{1.0, 1};
  /// dP/dt = −(2a+α)P + (b²/r)P² − 1 + γ, P_T = 0.
  std::vector<double> P;
  /// dρ/dt = −(a − (b²/r)P)ρ + γη, ρ_T = 0.
  std::vector<double> rho;
  /// The mean system under p̄ = Pz̄ + ρ, z̄(0) = 0.
  std::vector<double> zbar, pbar;
  /// γ ≤ 1.
  bool gamma_condition = false;
  /// Roots ς₁ ≥ ς₂ of −(b²/r)ς² + (2a+α)ς + 1 − γ = 0, when real.
  std::optional<std::pair<double, double>> roots;
  /// Sup distance between RK4 and the closed-form P, when evaluated.
  std::optional<double> closed_form_error;
  bool closed_form_ok = false;
  /// Defect of −dp̄/dt = a p̄ + (1−γ)z̄ − γη along the computed mean path.
  double mean_residual = 0.0;
};

BsyyResult appendix_bsyy(const AppendixParams& p, const TimeGrid& grid);

/// Closed-form P_t; requires b ≠ 0 and distinct real roots.
double bsyy_closed_form_P(const AppendixParams& p, double t);

}  // namespace lqmfg
