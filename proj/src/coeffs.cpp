#include "lqmfg/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lqmfg/errors.hpp"

namespace lqmfg {

namespace {

constexpr double kPsdTolerance = -1e-10;
constexpr double kSymmetryTolerance = 1e-9;
constexpr double kNodeTolerance = 1e-9;
// Upper bound on how far with_breakpoints() may refine the requested grid.
constexpr std::size_t kMaxRefinement = 64;

double min_sym_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

std::string fmt_time(double t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

}  // namespace

TimeGrid::TimeGrid(double t_end, std::size_t steps)
    : t_end_(t_end), steps_(steps) {
  if (!(t_end > 0.0) || !std::isfinite(t_end)) {
    throw Error("time grid needs a positive finite horizon");
  }
  if (steps == 0) throw Error("time grid needs at least one step");
}

TimeGrid TimeGrid::with_breakpoints(double t_end, std::size_t min_steps,
                                    std::span<const double> breakpoints) {
  std::vector<double> interior;
  for (double b : breakpoints) {
    if (b > kNodeTolerance && b < t_end - kNodeTolerance) interior.push_back(b);
  }
  if (interior.empty()) return TimeGrid(t_end, min_steps);
  for (std::size_t k = min_steps; k <= kMaxRefinement * min_steps; ++k) {
    TimeGrid g(t_end, k);
    bool all = std::all_of(interior.begin(), interior.end(), [&](double b) {
      return g.index_of(b).has_value();
    });
    if (all) return g;
  }
  throw Error("no uniform grid with at most " +
              std::to_string(kMaxRefinement * min_steps) +
              " steps contains every schedule breakpoint");
}

std::optional<std::size_t> TimeGrid::index_of(double t, double tol) const {
  double pos = t / t_end_ * static_cast<double>(steps_);
  double k = std::round(pos);
  if (k < 0.0 || k > static_cast<double>(steps_)) return std::nullopt;
  auto idx = static_cast<std::size_t>(k);
  if (std::abs((*this)[idx] - t) > tol) return std::nullopt;
  return idx;
}

Schedule Schedule::constant(Matrix value) {
  Schedule s;
  s.pieces_.push_back({0.0, std::move(value)});
  return s;
}

Schedule Schedule::piecewise(std::vector<Piece> pieces) {
  if (pieces.empty()) throw InvalidProblem("schedule needs at least one piece");
  if (pieces.front().start != 0.0) {
    throw InvalidProblem("first schedule piece must start at 0");
  }
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    if (!(pieces[i].start > pieces[i - 1].start)) {
      throw InvalidProblem("schedule start times must be strictly increasing");
    }
    if (pieces[i].value.rows() != pieces[0].value.rows() ||
        pieces[i].value.cols() != pieces[0].value.cols()) {
      throw DimensionMismatch("schedule pieces have inconsistent shapes");
    }
  }
  Schedule s;
  s.pieces_ = std::move(pieces);
  return s;
}

const Matrix& Schedule::at(double t) const {
  if (pieces_.empty()) throw Error("evaluating an empty schedule");
  // Last piece whose start is <= t.
  auto it = std::upper_bound(
      pieces_.begin(), pieces_.end(), t,
      [](double v, const Piece& p) { return v < p.start; });
  if (it == pieces_.begin()) return pieces_.front().value;
  return std::prev(it)->value;
}

std::vector<double> Schedule::breakpoints() const {
  std::vector<double> out;
  for (std::size_t i = 1; i < pieces_.size(); ++i) out.push_back(pieces_[i].start);
  return out;
}

MatrixPath sample(const Schedule& schedule, const TimeGrid& grid,
                  Eigen::Index rows, Eigen::Index cols) {
  if (schedule.rows() != rows || schedule.cols() != cols) {
    throw DimensionMismatch(
        "schedule is " + std::to_string(schedule.rows()) + "x" +
        std::to_string(schedule.cols()) + ", expected " + std::to_string(rows) +
        "x" + std::to_string(cols));
  }
  MatrixPath path{grid, {}};
  path.samples.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    // Snap to a breakpoint that coincides with this node so that the
    // right-continuous value is picked despite rounding in t_k.
    double t = grid[k];
    for (const auto& p : schedule.pieces()) {
      if (std::abs(p.start - t) <= kNodeTolerance) t = p.start;
    }
    path.samples.push_back(schedule.at(t));
  }
  return path;
}

std::vector<double> ProblemSpec::breakpoints() const {
  std::vector<double> all;
  for (const Schedule* s : {&A, &Abar, &B, &sigma, &Q, &Qbar, &R, &S}) {
    auto b = s->breakpoints();
    all.insert(all.end(), b.begin(), b.end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

bool ProblemSpec::has_constant_coefficients() const {
  for (const Schedule* s : {&A, &Abar, &B, &sigma, &Q, &Qbar, &R, &S}) {
    if (!s->is_constant()) return false;
  }
  return true;
}

Matrix ProblemSpec::effective_S_terminal() const {
  return QbarT * (Matrix::Identity(n, n) - ST);
}

ProblemSpec zero_problem(int n, int m, double T) {
  ProblemSpec spec;
  spec.n = n;
  spec.m = m;
  spec.T = T;
  spec.x0_mean = Vector::Zero(n);
  Matrix zn = Matrix::Zero(n, n);
  spec.A = Schedule::constant(zn);
  spec.Abar = Schedule::constant(zn);
  spec.B = Schedule::constant(Matrix::Zero(n, m));
  spec.sigma = Schedule::constant(zn);
  spec.Q = Schedule::constant(zn);
  spec.Qbar = Schedule::constant(zn);
  spec.R = Schedule::constant(Matrix::Identity(m, m));
  spec.S = Schedule::constant(zn);
  spec.QT = zn;
  spec.QbarT = zn;
  spec.ST = zn;
  return spec;
}

ProblemSpec symmetrized(ProblemSpec spec) {
  auto fix = [&](Matrix& m, const std::string& name) {
    if (m.rows() != m.cols()) return;
    double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance) {
      spec.warnings.push_back(name + ": asymmetry " + std::to_string(asym) +
                              " removed by symmetrization");
    }
    m = (0.5 * (m + m.transpose())).eval();
  };
  auto fix_schedule = [&](Schedule& s, const std::string& name) {
    if (s.empty()) return;
    std::vector<Schedule::Piece> pieces = s.pieces();
    for (auto& p : pieces) fix(p.value, name);
    s = Schedule::piecewise(std::move(pieces));
  };
  fix_schedule(spec.Q, "Q");
  fix_schedule(spec.Qbar, "Qbar");
  fix_schedule(spec.R, "R");
  fix(spec.QT, "QT");
  fix(spec.QbarT, "QbarT");
  return spec;
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  for (const auto& w : warnings) os << "warning: " << w << "\n";
  if (violations.empty()) {
    os << "valid\n";
    return os.str();
  }
  for (const auto& v : violations) os << "[" << v.section << "] " << v.message << "\n";
  return os.str();
}

ValidationReport validate(const ProblemSpec& spec) {
  ValidationReport report;
  report.warnings = spec.warnings;
  auto fail = [&](const std::string& section, const std::string& msg) {
    report.violations.push_back({section, msg});
  };

  if (spec.n <= 0) fail("problem", "n must be a positive integer");
  if (spec.m <= 0) fail("problem", "m must be a positive integer");
  if (!(spec.T > 0.0) || !std::isfinite(spec.T)) fail("problem", "T must be positive");
  if (!(spec.delta > 0.0)) fail("problem", "delta must be positive");
  if (!report.ok()) return report;
  if (spec.x0_mean.size() != spec.n) {
    fail("problem", "x0_mean has " + std::to_string(spec.x0_mean.size()) +
                        " entries, expected " + std::to_string(spec.n));
  }

  const Eigen::Index n = spec.n, m = spec.m;
  struct Entry {
    const char* name;
    const Schedule* schedule;
    Eigen::Index rows, cols;
  };
  const Entry entries[] = {
      {"A", &spec.A, n, n},       {"Abar", &spec.Abar, n, n},
      {"B", &spec.B, n, m},       {"sigma", &spec.sigma, n, n},
      {"Q", &spec.Q, n, n},       {"Qbar", &spec.Qbar, n, n},
      {"R", &spec.R, m, m},       {"S", &spec.S, n, n},
  };
  bool shapes_ok = true;
  for (const auto& e : entries) {
    if (e.schedule->empty()) {
      fail(e.name, "schedule is missing");
      shapes_ok = false;
      continue;
    }
    if (e.schedule->rows() != e.rows || e.schedule->cols() != e.cols) {
      fail(e.name, "shape " + std::to_string(e.schedule->rows()) + "x" +
                       std::to_string(e.schedule->cols()) + ", expected " +
                       std::to_string(e.rows) + "x" + std::to_string(e.cols));
      shapes_ok = false;
    }
    for (const auto& p : e.schedule->pieces()) {
      if (p.start >= spec.T) {
        fail(e.name, "piece starting at t=" + fmt_time(p.start) +
                         " lies outside [0, T)");
      }
      if (!p.value.allFinite()) {
        fail(e.name, "non-finite entry at t=" + fmt_time(p.start));
      }
    }
  }
  const struct {
    const char* name;
    const Matrix* value;
  } terminals[] = {{"QT", &spec.QT}, {"QbarT", &spec.QbarT}, {"ST", &spec.ST}};
  for (const auto& t : terminals) {
    if (t.value->rows() != n || t.value->cols() != n) {
      fail(t.name, "shape " + std::to_string(t.value->rows()) + "x" +
                       std::to_string(t.value->cols()) + ", expected " +
                       std::to_string(n) + "x" + std::to_string(n));
      shapes_ok = false;
    } else if (!t.value->allFinite()) {
      fail(t.name, "non-finite entry");
    }
  }
  if (!shapes_ok) return report;

  auto check_psd = [&](const char* name, const Matrix& value, double at) {
    double lo = min_sym_eigenvalue(value);
    if (lo < kPsdTolerance) {
      fail(name, std::string(name) + " is not non-negative definite at t=" +
                     fmt_time(at) + " (min eigenvalue " + std::to_string(lo) + ")");
    }
  };
  for (const auto& p : spec.Q.pieces()) check_psd("Q", p.value, p.start);
  for (const auto& p : spec.Qbar.pieces()) check_psd("Qbar", p.value, p.start);
  check_psd("QT", spec.QT, spec.T);
  check_psd("QbarT", spec.QbarT, spec.T);
  for (const auto& p : spec.R.pieces()) {
    double lo = min_sym_eigenvalue(p.value);
    if (lo < spec.delta + kPsdTolerance) {
      fail("R", "R ⪰ δI fails at t=" + fmt_time(p.start) + " (min eigenvalue " +
                    std::to_string(lo) + ", delta " + std::to_string(spec.delta) +
                    ")");
    }
  }
  for (const Schedule* s : {&spec.Q, &spec.Qbar, &spec.R}) {
    for (const auto& p : s->pieces()) {
      if ((p.value - p.value.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance) {
        report.warnings.push_back("weight matrix at t=" + fmt_time(p.start) +
                                  " is not symmetric; its symmetric part is used");
      }
    }
  }
  return report;
}

void require_valid(const ProblemSpec& spec) {
  ValidationReport report = validate(spec);
  if (report.ok()) return;
  std::string msg = "invalid problem:";
  for (const auto& v : report.violations) msg += " [" + v.section + "] " + v.message + ";";
  throw InvalidProblem(msg);
}

EffectiveS effective_S(const ProblemSpec& spec, const TimeGrid& grid) {
  const Eigen::Index n = spec.n;
  MatrixPath qbar = sample(spec.Qbar, grid, n, n);
  MatrixPath s = sample(spec.S, grid, n, n);
  EffectiveS out{MatrixPath{grid, {}}, spec.effective_S_terminal()};
  out.path.samples.reserve(grid.size());
  const Matrix I = Matrix::Identity(n, n);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.path.samples.push_back(qbar[k] * (I - s[k]));
  }
  return out;
}

TimeGrid make_grid(const ProblemSpec& spec, std::size_t min_steps) {
  auto bp = spec.breakpoints();
  return TimeGrid::with_breakpoints(spec.T, min_steps, bp);
}

SampledCoefficients sample_coefficients(const ProblemSpec& spec,
                                        const TimeGrid& grid) {
  const Eigen::Index n = spec.n, m = spec.m;
  SampledCoefficients c{grid, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {},
                        spec.QT, spec.QbarT, spec.ST, spec.effective_S_terminal()};
  c.A = sample(spec.A, grid, n, n).samples;
  c.Abar = sample(spec.Abar, grid, n, n).samples;
  c.B = sample(spec.B, grid, n, m).samples;
  c.sigma = sample(spec.sigma, grid, n, n).samples;
  c.Q = sample(spec.Q, grid, n, n).samples;
  c.Qbar = sample(spec.Qbar, grid, n, n).samples;
  c.R = sample(spec.R, grid, m, m).samples;
  c.S = sample(spec.S, grid, n, n).samples;
  const Matrix I = Matrix::Identity(n, n);
  c.Rinv.reserve(grid.size());
  c.G.reserve(grid.size());
  c.Scal.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    // Consecutive nodes on the same piece share one factorization.
    if (k > 0 && c.R[k] == c.R[k - 1] && c.B[k] == c.B[k - 1]) {
      c.Rinv.push_back(c.Rinv.back());
      c.G.push_back(c.G.back());
    } else {
      Matrix rinv = c.R[k].ldlt().solve(Matrix::Identity(m, m));
      c.G.push_back(c.B[k] * rinv * c.B[k].transpose());
      c.Rinv.push_back(std::move(rinv));
    }
    c.Scal.push_back(c.Qbar[k] * (I - c.S[k]));
  }
  return c;
}

CoefficientsAt coefficients_at(const ProblemSpec& spec, double t) {
  CoefficientsAt c;
  c.A = spec.A.at(t);
  c.Abar = spec.Abar.at(t);
  c.B = spec.B.at(t);
  c.sigma = spec.sigma.at(t);
  c.Q = spec.Q.at(t);
  c.Qbar = spec.Qbar.at(t);
  c.R = spec.R.at(t);
  c.S = spec.S.at(t);
  c.Rinv = c.R.ldlt().solve(Matrix::Identity(c.R.rows(), c.R.cols()));
  c.G = c.B * c.Rinv * c.B.transpose();
  c.Scal = c.Qbar * (Matrix::Identity(spec.n, spec.n) - c.S);
  return c;
}

Schedule derived_schedule(
    const ProblemSpec& spec,
    const std::function<Matrix(const CoefficientsAt&)>& build) {
  std::vector<Schedule::Piece> pieces;
  pieces.push_back({0.0, build(coefficients_at(spec, 0.0))});
  for (double b : spec.breakpoints()) {
    pieces.push_back({b, build(coefficients_at(spec, b))});
  }
  return pieces.size() == 1 ? Schedule::constant(pieces[0].value)
                            : Schedule::piecewise(std::move(pieces));
}

}  // namespace lqmfg
