#include "lqmfg/mftype.hpp"

#include <cmath>
#include <sstream>

#include "lqmfg/csv.hpp"
#include "lqmfg/errors.hpp"
#include "lqmfg/fbsolver.hpp"
#include "lqmfg/linear_bvp.hpp"

namespace lqmfg {

namespace {

constexpr double kDifferTolerance = 1e-7;

bool differs(double x, double y) {
  return std::abs(x - y) > kDifferTolerance * (1.0 + std::abs(x));
}

// (1 − e^{−xT}) / x.
double damped(double x, double T) { return -std::expm1(-x * T) / x; }

ProblemSpec scalar_spec(const ComparisonParams& p) {
  ProblemSpec s = zero_problem(1, 1, p.T);
  auto one = [](double v) { return Schedule::constant(Matrix::Constant(1, 1, v)); };
  s.A = one(p.a);
  s.Abar = one(p.abar);
  s.B = one(p.b);
  s.R = one(p.r);
  s.Q = one(p.q);
  s.S = one(1.0);
  s.QT = Matrix::Constant(1, 1, p.qT);
  s.ST = Matrix::Identity(1, 1);
  s.x0_mean = Vector::Constant(1, p.x0);
  return s;
}

}  // namespace

MFTypeSolution solve_mftype_mean(const ProblemSpec& spec, const TimeGrid& grid) {
  require_valid(spec);
  const Eigen::Index n = spec.n;
  const Matrix I = Matrix::Identity(n, n);
  const Schedule H = derived_schedule(spec, [&](const CoefficientsAt& c) {
    const Matrix W = c.Q + (I - c.S).transpose() * c.Qbar * (I - c.S);
    Matrix out(2 * n, 2 * n);
    out << c.A + c.Abar, -c.G, -W, -(c.A + c.Abar).transpose();
    return out;
  });
  const Matrix C = spec.QT + (I - spec.ST).transpose() * spec.QbarT * (I - spec.ST);
  VectorPath y;
  try {
    y = LinearBvp(H, grid, C).solve(spec.x0_mean);
  } catch (const SingularShootingMatrix& e) {
    throw Error(std::string("mean-field-type system unexpectedly singular: ") + e.what());
  }
  MFTypeSolution out{grid, {}, {}};
  for (const auto& v : y) {
    out.ybar.push_back(v.head(n));
    out.pbar.push_back(v.tail(n));
  }
  out.boundary_residual = (out.pbar.back() - C * out.ybar.back()).norm();
  return out;
}

ComparisonResult compare_mfg_mftype(const ComparisonParams& p) {
  const ProblemSpec spec = scalar_spec(p);
  const TimeGrid grid(p.T, p.steps);
  ComparisonResult out;
  out.psi1_T = solve_newric_shooting(spec, grid).eta.back()(0);
  out.psi2_T = solve_mftype_mean(spec, grid).pbar.back()(0);
  out.differ = differs(out.psi1_T, out.psi2_T);

  const double k1 = 2.0 * p.a + p.abar, k2 = 2.0 * p.a + 2.0 * p.abar;
  if (p.q == 0.0 && p.qT != 0.0 && p.b != 0.0 && p.x0 != 0.0 && k1 != 0.0 &&
      k2 != 0.0) {
    // With Q = 0 the two terminal states (hence ψ(T) = q_T φ(T)) differ
    // exactly when these two quantities differ.
    out.lhs = damped(k1, p.T);
    out.rhs = std::exp(p.abar * p.T) * damped(k2, p.T);
    out.closed_form_differ = differs(*out.lhs, *out.rhs);
  }
  return out;
}

std::string ComparisonResult::to_text() const {
  std::ostringstream s;
  s << (differ ? "differ" : "coincide") << ": psi1_T=" << format_double(psi1_T)
    << " psi2_T=" << format_double(psi2_T);
  if (lhs) {
    s << " lhs=" << format_double(*lhs) << " rhs=" << format_double(*rhs)
      << " closed_form=" << (*closed_form_differ ? "differ" : "coincide")
      << (consistent() ? " (consistent)" : " (INCONSISTENT)");
  }
  return s.str();
}

void write_csv(std::ostream& out, const MFTypeSolution& sol) {
  const Eigen::Index n = sol.ybar.empty() ? 0 : sol.ybar[0].size();
  {
    CsvRow row(out);
    row << "t";
    for (Eigen::Index i = 1; i <= n; ++i) row << "ybar_" + std::to_string(i);
    for (Eigen::Index i = 1; i <= n; ++i) row << "pbar_" + std::to_string(i);
  }
  for (std::size_t k = 0; k < sol.ybar.size(); ++k) {
    CsvRow row(out);
    row << sol.grid[k];
    for (Eigen::Index i = 0; i < n; ++i) row << sol.ybar[k](i);
    for (Eigen::Index i = 0; i < n; ++i) row << sol.pbar[k](i);
  }
}

}  // namespace lqmfg
