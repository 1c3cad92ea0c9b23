#include "lqmfg/odecore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lqmfg/errors.hpp"

namespace lqmfg {

namespace {

bool within(const Matrix& y, double threshold) {
  if (!y.allFinite()) return false;
  return y.size() == 0 || y.cwiseAbs().maxCoeff() <= threshold;
}

}  // namespace

Trajectory rk4_integrate(const Field& field, const Matrix& y_start,
                         const TimeGrid& grid, Direction direction,
                         double blow_up_threshold) {
  const std::size_t K = grid.steps();
  const double h = grid.step();
  Trajectory out{grid, std::vector<Matrix>(grid.size()), std::nullopt};
  const Matrix nan_fill =
      Matrix::Constant(y_start.rows(), y_start.cols(),
                       std::numeric_limits<double>::quiet_NaN());

  auto mark_from = [&](std::size_t bad, bool forward) {
    out.blow_up = bad;
    if (forward) {
      for (std::size_t j = bad; j <= K; ++j) out.samples[j] = nan_fill;
    } else {
      for (std::size_t j = 0; j <= bad; ++j) out.samples[j] = nan_fill;
    }
  };

  if (direction == Direction::kForward) {
    out.samples[0] = y_start;
    if (!within(y_start, blow_up_threshold)) {
      mark_from(0, true);
      return out;
    }
    for (std::size_t k = 0; k < K; ++k) {
      const Matrix& y = out.samples[k];
      const double t = grid[k];
      Matrix k1 = field(t, k, y);
      Matrix k2 = field(t + 0.5 * h, k, y + 0.5 * h * k1);
      Matrix k3 = field(t + 0.5 * h, k, y + 0.5 * h * k2);
      Matrix k4 = field(grid[k + 1], k, y + h * k3);
      Matrix next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!within(next, blow_up_threshold)) {
        mark_from(k + 1, true);
        return out;
      }
      out.samples[k + 1] = std::move(next);
    }
  } else {
    out.samples[K] = y_start;
    if (!within(y_start, blow_up_threshold)) {
      mark_from(K, false);
      return out;
    }
    for (std::size_t k = K; k-- > 0;) {
      const Matrix& y = out.samples[k + 1];
      const double t = grid[k + 1];
      // dy/dτ = -f(T - τ, y) with τ running forward.
      Matrix k1 = -field(t, k, y);
      Matrix k2 = -field(t - 0.5 * h, k, y + 0.5 * h * k1);
      Matrix k3 = -field(t - 0.5 * h, k, y + 0.5 * h * k2);
      Matrix k4 = -field(grid[k], k, y + h * k3);
      Matrix next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!within(next, blow_up_threshold)) {
        mark_from(k, false);
        return out;
      }
      out.samples[k] = std::move(next);
    }
  }
  return out;
}

void require_finite(const Trajectory& traj, const char* what) {
  if (traj.blow_up) {
    throw NumericalBlowUp(*traj.blow_up,
                          std::string(what) + ": non-finite value at grid node " +
                              std::to_string(*traj.blow_up));
  }
}

FundamentalSolution fundamental_solution(std::span<const Matrix> A,
                                         std::size_t anchor,
                                         const TimeGrid& grid) {
  if (A.size() < grid.steps()) {
    throw DimensionMismatch("fundamental_solution: coefficient path shorter than grid");
  }
  if (anchor > grid.steps()) throw Error("fundamental_solution: anchor outside grid");
  const Eigen::Index n = A[0].rows();
  FundamentalSolution out{anchor, grid, std::vector<Matrix>(grid.size())};
  out.samples[anchor] = Matrix::Identity(n, n);
  const double h = grid.step();
  // Coefficients are constant on each step, so exp(h A_k) is the exact step
  // propagator; consecutive steps on one piece share it.
  std::vector<Matrix> fwd(grid.steps()), bwd(grid.steps());
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    if (k > 0 && A[k] == A[k - 1]) {
      fwd[k] = fwd[k - 1];
      bwd[k] = bwd[k - 1];
    } else {
      fwd[k] = matrix_exponential(h * A[k]);
      bwd[k] = matrix_exponential(-h * A[k]);
    }
  }
  for (std::size_t k = anchor; k < grid.steps(); ++k) {
    out.samples[k + 1] = fwd[k] * out.samples[k];
    if (!out.samples[k + 1].allFinite()) {
      throw NumericalBlowUp(k + 1, "fundamental solution overflow");
    }
  }
  for (std::size_t k = anchor; k-- > 0;) {
    out.samples[k] = bwd[k] * out.samples[k + 1];
    if (!out.samples[k].allFinite()) {
      throw NumericalBlowUp(k, "fundamental solution overflow");
    }
  }
  return out;
}

Matrix matrix_exponential(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("matrix_exponential: not square");
  if (!m.allFinite()) throw Error("matrix_exponential: non-finite input");
  const Eigen::Index n = m.rows();
  if (n == 0) return m;
  if (m.isZero(0.0)) return Matrix::Identity(n, n);
  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0,
                                 7771770303897600.0,  1187353796428800.0,
                                 129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,
                                 1323241920.0,        40840800.0,
                                 960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > theta13) s = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const Matrix a = m / std::ldexp(1.0, s);
  const Matrix I = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  Matrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 +
                  b[5] * a4 + b[3] * a2 + b[1] * I);
  Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
             b[4] * a4 + b[2] * a2 + b[0] * I;
  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

Matrix psd_sqrt(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("psd_sqrt: not square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw NotPositiveDefinite("psd_sqrt: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  Vector ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff())) {
    throw NotPositiveDefinite("psd_sqrt: matrix is not positive semidefinite");
  }
  Vector root = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Matrix inv_sqrt(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("inv_sqrt: not square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw NotPositiveDefinite("inv_sqrt: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  Vector ev = es.eigenvalues();
  if (ev.minCoeff() <= 1e-12) {
    throw NotPositiveDefinite("inv_sqrt: matrix is not positive definite");
  }
  Vector root = ev.cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double max_sym_eigenvalue(const Matrix& m) {
  if (m.rows() == 1) return m(0, 0);
  if (m.rows() == 2) {
    const double a = m(0, 0), d = m(1, 1), c = 0.5 * (m(0, 1) + m(1, 0));
    return 0.5 * (a + d) + std::sqrt(0.25 * (a - d) * (a - d) + c * c);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double condition_number(const Matrix& m) {
  if (!m.allFinite()) return std::numeric_limits<double>::infinity();
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  double lo = sv(sv.size() - 1);
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / lo;
}

GridInterpolant::GridInterpolant(const TimeGrid& grid,
                                 std::span<const Vector> values,
                                 std::vector<std::size_t> break_nodes)
    : grid_(grid), values_(values), breaks_(std::move(break_nodes)) {
  if (values.size() != grid.size()) {
    throw DimensionMismatch("GridInterpolant: sample count differs from grid size");
  }
  breaks_.push_back(0);
  breaks_.push_back(grid.steps());
  std::sort(breaks_.begin(), breaks_.end());
  breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
}

Vector GridInterpolant::operator()(double t, std::size_t k) const {
  // Segment of nodes [lo, hi] containing step k without crossing a break.
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), k);
  const std::size_t hi = (it == breaks_.end()) ? grid_.steps() : *it;
  const std::size_t lo = *std::prev(it);
  const std::size_t count = std::min<std::size_t>(4, hi - lo + 1);
  std::size_t first = (k >= lo + 1) ? k - 1 : lo;
  if (first + count - 1 > hi) first = hi + 1 - count;

  Vector out = Vector::Zero(values_[0].size());
  for (std::size_t i = 0; i < count; ++i) {
    double w = 1.0;
    const double ti = grid_[first + i];
    for (std::size_t j = 0; j < count; ++j) {
      if (j == i) continue;
      const double tj = grid_[first + j];
      w *= (t - tj) / (ti - tj);
    }
    out += w * values_[first + i];
  }
  return out;
}

std::vector<std::size_t> breakpoint_nodes(const ProblemSpec& spec,
                                          const TimeGrid& grid) {
  std::vector<std::size_t> nodes;
  for (double b : spec.breakpoints()) {
    if (auto idx = grid.index_of(b)) nodes.push_back(*idx);
  }
  return nodes;
}

Matrix propagator(const Schedule& generator, double s, double t) {
  const Eigen::Index n = generator.rows();
  Matrix out = Matrix::Identity(n, n);
  if (t == s) return out;
  const bool forward = t > s;
  const double lo = forward ? s : t, hi = forward ? t : s;
  // Φ(hi, lo) as an ordered product over the pieces met in [lo, hi].
  const auto& pieces = generator.pieces();
  for (std::size_t j = 0; j < pieces.size(); ++j) {
    const double a = std::max(lo, j == 0 ? lo : pieces[j].start);
    const double b = (j + 1 < pieces.size()) ? std::min(hi, pieces[j + 1].start) : hi;
    if (b <= a) continue;
    out = matrix_exponential((b - a) * pieces[j].value) * out;
  }
  if (!out.allFinite()) throw NumericalBlowUp(0, "propagator overflow");
  return forward ? out : Matrix(out.partialPivLu().inverse());
}

double trapezoid(std::span<const double> values, double h) {
  if (values.size() < 2) return 0.0;
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
  return sum * h;
}

}  // namespace lqmfg
