#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "lqmfg/coeffs.hpp"

namespace lqmfg {

/// Entries beyond this magnitude count as a finite-time blow-up.
inline constexpr double kBlowUpThreshold = 1e12;

/// A (possibly nonsymmetric) matrix Riccati path Γ_t, Ξ_t or P_t, with an
/// optional companion vector path (ζ_t or ρ_t).
struct RiccatiPath {
  TimeGrid grid;
  std::vector<Matrix> gamma;
  std::optional<VectorPath> aux;
  /// First grid index (scanning backward from T) whose entries blew up.
  std::optional<std::size_t> blow_up;
};

/// Ξ with Ξ_T = Q_T + Q̄_T and the companion ζ driven by the mean path `z`,
/// ζ_T = −Q̄_T S_T z_T, both by backward RK4.
RiccatiPath solve_symmetric(const ProblemSpec& spec, const TimeGrid& grid,
                            const VectorPath& z);

/// Γ_t = −V_t⁻¹U_t with (U_t, V_t) = (Q_T+𝒮_T, −I) Φ(T, t). Throws
/// BoundaryOperatorSingular at the first t (from T backward) where V_t is
/// numerically singular.
RiccatiPath solve_nonsymmetric_radon(const ProblemSpec& spec, const TimeGrid& grid);

/// Backward RK4 on dΓ/dt = −Γ(A+Ā) − A*Γ + ΓBR⁻¹B*Γ − (Q+𝒮); flags blow-up
/// instead of throwing.
RiccatiPath solve_nonsymmetric_direct(const ProblemSpec& spec, const TimeGrid& grid);

/// Explicit scalar solutions of dΓ/dt = −(2a+ā)Γ + (b²/r)Γ² − q, Γ_T = q_T.
/// Throws DistinctRootsViolated when b ≠ 0 and the characteristic quadratic
/// lacks two distinct real roots. An escape to infinity before t = 0 is
/// flagged in `blow_up` with NaN samples from there on.
RiccatiPath solve_1d_closed_form(double a, double abar, double b, double r,
                                 double q_plus_s, double qT_plus_sT, double T,
                                 const TimeGrid& grid);

/// `t,gamma_11,...,gamma_nn[,zeta_1..zeta_n]`.
void write_csv(std::ostream& out, const RiccatiPath& path);

}  // namespace lqmfg
