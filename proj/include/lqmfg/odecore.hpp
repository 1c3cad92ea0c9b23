#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "lqmfg/coeffs.hpp"

namespace lqmfg {

enum class Direction { kForward, kBackward };

/// Right-hand side f(t, k, y) of dy/dt = f. `k` is the index of the grid step
/// being taken, so piecewise-constant coefficients can be read from the
/// piece of [t_k, t_{k+1}) at every stage.
using Field = std::function<Matrix(double t, std::size_t k, const Matrix& y)>;

struct Trajectory {
  TimeGrid grid;
  std::vector<Matrix> samples;
  /// First grid node whose value was non-finite or exceeded the threshold.
  /// Samples past this node are NaN.
  std::optional<std::size_t> blow_up;
};

/// Classical RK4 over the grid. Forward runs start at node 0; backward runs
/// start at node K and integrate d/dτ y = -f(T - τ, y).
Trajectory rk4_integrate(const Field& field, const Matrix& y_start,
                         const TimeGrid& grid, Direction direction,
                         double blow_up_threshold =
                             std::numeric_limits<double>::infinity());

/// Throws NumericalBlowUp if the trajectory blew up.
void require_finite(const Trajectory& traj, const char* what);

struct FundamentalSolution {
  std::size_t anchor;  // grid index of s
  TimeGrid grid;
  std::vector<Matrix> samples;  // φ(t_k, s)
};

/// Solves dφ/dt = A_t φ, φ(s, s) = I forward and backward from the anchor
/// node. `A` holds the coefficient for each step (A[k] on [t_k, t_{k+1}));
/// steps are propagated by exp(h A[k]), exact for piecewise-constant A.
FundamentalSolution fundamental_solution(std::span<const Matrix> A,
                                         std::size_t anchor,
                                         const TimeGrid& grid);

/// exp(M) by scaling and squaring with the degree-13 Padé approximant.
Matrix matrix_exponential(const Matrix& m);

/// Transition matrix Φ(t, s) of dy/dt = G(t) y for a piecewise-constant
/// generator, as an ordered product of matrix exponentials.
Matrix propagator(const Schedule& generator, double s, double t);

/// Principal square root of a symmetric PSD matrix.
Matrix psd_sqrt(const Matrix& m);
/// Inverse principal square root of a symmetric PD matrix (smallest
/// eigenvalue > 1e-12).
Matrix inv_sqrt(const Matrix& m);

/// Largest singular value.
double spectral_norm(const Matrix& m);
/// Largest eigenvalue of the symmetric part of `m`.
double max_sym_eigenvalue(const Matrix& m);

/// 2-norm condition number; infinity for singular or non-finite input.
double condition_number(const Matrix& m);

/// Cubic Lagrange interpolation of grid samples at t in [t_k, t_{k+1}],
/// using the four nearest nodes on the same side of any breakpoint in
/// `breaks` (node indices where the derivative may jump).
class GridInterpolant {
 public:
  GridInterpolant(const TimeGrid& grid, std::span<const Vector> values,
                  std::vector<std::size_t> break_nodes = {});
  Vector operator()(double t, std::size_t k) const;

 private:
  TimeGrid grid_;
  std::span<const Vector> values_;
  std::vector<std::size_t> breaks_;
};

/// Node indices of the schedule breakpoints of `spec` on `grid`.
std::vector<std::size_t> breakpoint_nodes(const ProblemSpec& spec,
                                          const TimeGrid& grid);

/// Trapezoidal rule for uniformly spaced samples.
double trapezoid(std::span<const double> values, double h);

}  // namespace lqmfg
