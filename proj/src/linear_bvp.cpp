#include "lqmfg/linear_bvp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lqmfg/errors.hpp"
#include "lqmfg/odecore.hpp"

namespace lqmfg {

double boundary_condition(const Matrix& row, const Matrix& M) {
  if (!row.allFinite()) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Matrix> svd(M);
  const double lo = svd.singularValues()(M.rows() - 1);
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return spectral_norm(row) / lo;
}

LinearBvp::LinearBvp(Schedule generator, const TimeGrid& grid, Matrix terminal)
    : generator_(std::move(generator)),
      grid_(grid),
      terminal_(std::move(terminal)),
      n_(terminal_.rows()) {
  if (generator_.rows() != 2 * n_ || generator_.cols() != 2 * n_ ||
      terminal_.cols() != n_) {
    throw DimensionMismatch("LinearBvp: generator must be 2n x 2n, terminal n x n");
  }
  const double h = grid_.step();
  step_.resize(grid_.steps());
  const Matrix* prev = nullptr;
  for (std::size_t k = 0; k < grid_.steps(); ++k) {
    const Matrix& Hk = generator_.at(0.5 * (grid_[k] + grid_[k + 1]));
    if (prev == &Hk) {
      step_[k] = step_[k - 1];
    } else {
      step_[k] = matrix_exponential(h * Hk);
    }
    prev = &Hk;
  }
  phi_T_ = propagator(generator_, 0.0, grid_.end());
  // Measured against the whole boundary row [C, −I]Φ(T) rather than M
  // alone, so a scalar M that is zero up to round-off still counts.
  const Matrix row = terminal_ * phi_T_.topRows(n_) - phi_T_.bottomRows(n_);
  const Matrix M = row.rightCols(n_);
  condition_ = boundary_condition(row, M);
  if (!(condition_ <= kSingularCondition)) {
    std::ostringstream msg;
    msg << "shooting boundary operator is singular at T=" << grid_.end()
        << " (condition number " << condition_ << ")";
    throw SingularShootingMatrix(condition_, msg.str());
  }
  lu_.compute(M);
}

VectorPath LinearBvp::solve(const Vector& x0, const Vector& d,
                            const Source& f) const {
  if (x0.size() != n_) throw DimensionMismatch("LinearBvp: x0 has wrong size");
  const Vector dd = d.size() == 0 ? Vector::Zero(n_) : d;
  if (dd.size() != n_) throw DimensionMismatch("LinearBvp: d has wrong size");
  const std::size_t K = grid_.steps();

  // Particular solution from y(0) = 0 (RK4; exact when f is absent).
  VectorPath particular(grid_.size(), Vector::Zero(2 * n_));
  if (f) {
    const double h = grid_.step();
    for (std::size_t k = 0; k < K; ++k) {
      const Matrix& Hk = generator_.at(0.5 * (grid_[k] + grid_[k + 1]));
      const Vector& y = particular[k];
      const double t = grid_[k];
      Vector k1 = Hk * y + f(t, k);
      Vector k2 = Hk * (y + 0.5 * h * k1) + f(t + 0.5 * h, k);
      Vector k3 = Hk * (y + 0.5 * h * k2) + f(t + 0.5 * h, k);
      Vector k4 = Hk * (y + h * k3) + f(grid_[k + 1], k);
      particular[k + 1] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }

  const Vector& yp = particular[K];
  const Vector rhs = dd - (terminal_ * phi_T_.block(0, 0, n_, n_) -
                           phi_T_.block(n_, 0, n_, n_)) * x0 -
                     (terminal_ * yp.head(n_) - yp.tail(n_));
  const Vector p0 = lu_.solve(rhs);

  VectorPath out(grid_.size());
  Vector y(2 * n_);
  y << x0, p0;
  out[0] = y + particular[0];
  for (std::size_t k = 0; k < K; ++k) {
    y = step_[k] * y;
    out[k + 1] = y + particular[k + 1];
  }
  for (const auto& v : out) {
    if (!v.allFinite()) throw NumericalBlowUp(0, "LinearBvp: non-finite trajectory");
  }
  return out;
}

namespace {

// Weights of the derivative at `x` of the interpolating polynomial through
// the nodes `xs` (in units of the grid step).
std::vector<double> derivative_weights(const std::vector<double>& xs, double x) {
  const std::size_t m = xs.size();
  std::vector<double> w(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double denom = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) denom *= xs[i] - xs[j];
    }
    double sum = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
      if (l == i) continue;
      double prod = 1.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j != i && j != l) prod *= x - xs[j];
      }
      sum += prod;
    }
    w[i] = sum / denom;
  }
  return w;
}

}  // namespace

double ode_residual(const TimeGrid& grid, const VectorPath& y,
                    const std::function<Vector(std::size_t, const Vector&)>& rhs,
                    std::vector<std::size_t> break_nodes) {
  if (y.size() != grid.size()) {
    throw DimensionMismatch("ode_residual: path length differs from grid size");
  }
  break_nodes.push_back(0);
  break_nodes.push_back(grid.steps());
  std::sort(break_nodes.begin(), break_nodes.end());
  break_nodes.erase(std::unique(break_nodes.begin(), break_nodes.end()),
                    break_nodes.end());
  const double h = grid.step();
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::size_t lo, hi;
    if (k == grid.steps()) {
      hi = k;
      lo = break_nodes[break_nodes.size() - 2];
    } else {
      auto it = std::upper_bound(break_nodes.begin(), break_nodes.end(), k);
      hi = *it;
      lo = *std::prev(it);
    }
    const std::size_t count = std::min<std::size_t>(5, hi - lo + 1);
    std::size_t first = k >= lo + 2 ? k - 2 : lo;
    if (first + count - 1 > hi) first = hi + 1 - count;
    std::vector<double> xs(count);
    for (std::size_t i = 0; i < count; ++i) {
      xs[i] = static_cast<double>(first + i) - static_cast<double>(k);
    }
    const auto w = derivative_weights(xs, 0.0);
    Vector dy = Vector::Zero(y[k].size());
    for (std::size_t i = 0; i < count; ++i) dy += w[i] * y[first + i];
    dy /= h;
    worst = std::max(worst, (dy - rhs(k, y[k])).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace lqmfg
