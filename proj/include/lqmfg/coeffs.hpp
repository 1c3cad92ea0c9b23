#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace lqmfg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using VectorPath = std::vector<Vector>;

/// Default number of RK4 steps over [0, T].
inline constexpr std::size_t kDefaultSteps = 2000;

/// Uniform time grid t_k = T * k / K, k = 0..K.
class TimeGrid {
 public:
  TimeGrid(double t_end, std::size_t steps);

  /// Smallest uniform grid with at least `min_steps` steps on which every
  /// breakpoint in (0, t_end) is a node (to within 1e-9).
  static TimeGrid with_breakpoints(double t_end, std::size_t min_steps,
                                   std::span<const double> breakpoints);

  std::size_t steps() const { return steps_; }
  std::size_t size() const { return steps_ + 1; }
  double end() const { return t_end_; }
  double step() const { return t_end_ / static_cast<double>(steps_); }
  double operator[](std::size_t k) const {
    return t_end_ * static_cast<double>(k) / static_cast<double>(steps_);
  }
  std::optional<std::size_t> index_of(double t, double tol = 1e-9) const;

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.steps_ == b.steps_ && a.t_end_ == b.t_end_;
  }

 private:
  double t_end_;
  std::size_t steps_;
};

/// A constant or piecewise-constant, right-continuous matrix-valued function
/// of time.
class Schedule {
 public:
  struct Piece {
    double start;
    Matrix value;
  };

  Schedule() = default;
  static Schedule constant(Matrix value);
  /// Pieces must start at 0 with strictly increasing start times and share
  /// one shape.
  static Schedule piecewise(std::vector<Piece> pieces);

  bool is_constant() const { return pieces_.size() == 1; }
  bool empty() const { return pieces_.empty(); }
  Eigen::Index rows() const { return pieces_.empty() ? 0 : pieces_[0].value.rows(); }
  Eigen::Index cols() const { return pieces_.empty() ? 0 : pieces_[0].value.cols(); }
  const std::vector<Piece>& pieces() const { return pieces_; }

  /// Right-continuous evaluation; times past the last start use the last
  /// piece.
  const Matrix& at(double t) const;
  std::vector<double> breakpoints() const;

 private:
  std::vector<Piece> pieces_;
};

/// A matrix-valued function sampled on a uniform grid.
struct MatrixPath {
  TimeGrid grid;
  std::vector<Matrix> samples;

  const Matrix& operator[](std::size_t k) const { return samples[k]; }
};

/// Samples `schedule` at every grid node. Throws DimensionMismatch if the
/// schedule shape differs from rows x cols.
MatrixPath sample(const Schedule& schedule, const TimeGrid& grid,
                  Eigen::Index rows, Eigen::Index cols);

/// Full coefficient set of a linear-quadratic mean field game.
struct ProblemSpec {
  int n = 1;
  int m = 1;
  double T = 1.0;
  double delta = 1e-6;
  Vector x0_mean;

  Schedule A, Abar, B, sigma, Q, Qbar, R, S;
  Matrix QT, QbarT, ST;

  /// Notes produced while normalizing the inputs (e.g. symmetrization).
  std::vector<std::string> warnings;

  std::vector<double> breakpoints() const;
  bool has_constant_coefficients() const;
  /// Q̄_T (I - S_T).
  Matrix effective_S_terminal() const;
};

/// An n-dimensional problem with every coefficient zero except R = I.
ProblemSpec zero_problem(int n, int m, double T);

/// Replaces Q, Q̄, R (and the terminal weights) by their symmetric parts,
/// recording a warning for any asymmetry above 1e-9.
ProblemSpec symmetrized(ProblemSpec spec);

struct Violation {
  std::string section;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
  std::string to_text() const;
};

/// Checks dimensions, PSD-ness of the weights and R ⪰ δI on every piece.
/// Violations are reported, never thrown.
ValidationReport validate(const ProblemSpec& spec);

/// Throws InvalidProblem listing every violation when the spec is invalid.
void require_valid(const ProblemSpec& spec);

struct EffectiveS {
  MatrixPath path;
  Matrix terminal;
};

/// 𝒮_t = Q̄_t (I - S_t) on the grid plus the terminal Q̄_T (I - S_T).
EffectiveS effective_S(const ProblemSpec& spec, const TimeGrid& grid);

/// Grid over [0, T] containing all schedule breakpoints.
TimeGrid make_grid(const ProblemSpec& spec, std::size_t min_steps = kDefaultSteps);

/// Every coefficient sampled at the grid nodes, plus derived quantities.
/// The value at node k (k < K) is the value on [t_k, t_{k+1}).
struct SampledCoefficients {
  TimeGrid grid;
  std::vector<Matrix> A, Abar, B, sigma, Q, Qbar, R, S;
  std::vector<Matrix> Rinv;  // R^{-1}
  std::vector<Matrix> G;     // B R^{-1} B*
  std::vector<Matrix> Scal;  // Q̄ (I - S)
  Matrix QT, QbarT, ST, ScalT;
};

/// Every coefficient evaluated at a single time (right-continuous).
struct CoefficientsAt {
  Matrix A, Abar, B, sigma, Q, Qbar, R, S;
  Matrix Rinv, G, Scal;
};
CoefficientsAt coefficients_at(const ProblemSpec& spec, double t);

/// Piecewise-constant schedule on the pieces of `spec`, with value
/// `build(coefficients_at(spec, start))` on each piece.
Schedule derived_schedule(
    const ProblemSpec& spec,
    const std::function<Matrix(const CoefficientsAt&)>& build);

SampledCoefficients sample_coefficients(const ProblemSpec& spec,
                                        const TimeGrid& grid);

}  // namespace lqmfg
