#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "lqmfg/coeffs.hpp"

namespace lqmfg {

/// Condition number above which a shooting boundary operator is treated as
/// singular.
inline constexpr double kSingularCondition = 1e12;

/// ‖row‖ / σ_min(M) for the boundary row block `row` = [C, −I]Φ(T) and its
/// p₀-block M. At least cond(M); infinite when M is exactly singular.
double boundary_condition(const Matrix& row, const Matrix& M);

/// Linear two-point boundary-value problem on a uniform grid:
///
///   dy/dt = H(t) y + f(t),  y = (x, p) ∈ R^{2n},
///   x(0) = x0,  C x(T) − p(T) = d,
///
/// solved by shooting on the unknown p(0). The transition matrix and the LU
/// factorization of the boundary operator C Φ¹² − Φ²² are computed once and
/// reused across solves with different data.
class LinearBvp {
 public:
  using Source = std::function<Vector(double t, std::size_t k)>;

  /// Throws SingularShootingMatrix when the boundary operator's condition
  /// number exceeds kSingularCondition.
  LinearBvp(Schedule generator, const TimeGrid& grid, Matrix terminal);

  /// Returns y on the grid. `d` defaults to zero; `f` to no source.
  VectorPath solve(const Vector& x0, const Vector& d = Vector(),
                   const Source& f = nullptr) const;

  double condition() const { return condition_; }
  const Matrix& transition() const { return phi_T_; }
  const TimeGrid& grid() const { return grid_; }

 private:
  Schedule generator_;
  TimeGrid grid_;
  Matrix terminal_;
  Eigen::Index n_;
  std::vector<Matrix> step_;  // exp(h H) per grid step
  Matrix phi_T_;
  Eigen::PartialPivLU<Matrix> lu_;
  double condition_;
};

/// Largest ∞-norm defect between a 4th-order finite-difference derivative of
/// `y` and `rhs(k, y_k)` over the grid. Difference windows never straddle a
/// node in `break_nodes`; at a break node the right-hand window is used.
double ode_residual(const TimeGrid& grid, const VectorPath& y,
                    const std::function<Vector(std::size_t, const Vector&)>& rhs,
                    std::vector<std::size_t> break_nodes);

}  // namespace lqmfg
