#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "lqmfg/errors.hpp"
#include "lqmfg/fbsolver.hpp"
#include "lqmfg/linear_bvp.hpp"
#include "lqmfg/odecore.hpp"
#include "lqmfg/riccati.hpp"
#include "test_support.hpp"

namespace lqmfg {
namespace {

using testing::Scalar;

double det22(const ProblemSpec& spec, double t) {
  const int n = spec.n;
  return transition_matrix(spec, t).block(n, n, n, n).determinant();
}

double sup_diff(const VectorPath& a, const VectorPath& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, (a[k] - b[k]).cwiseAbs().maxCoeff());
  return d;
}

// Classical LQ mean path: backward RK4 for Γ on a grid twice as fine, then
// forward RK4 for ξ' = (A − GΓ)ξ reading Γ at the half nodes.
VectorPath classical_mean(const ProblemSpec& spec, const TimeGrid& grid) {
  const CoefficientsAt c = coefficients_at(spec, 0.0);
  const TimeGrid fine(grid.end(), 2 * grid.steps());
  Field riccati = [&](double, std::size_t, const Matrix& P) -> Matrix {
    return -(P * c.A + c.A.transpose() * P - P * c.G * P + c.Q);
  };
  const Trajectory P = rk4_integrate(riccati, spec.QT, fine, Direction::kBackward);
  VectorPath xi{spec.x0_mean};
  const double h = grid.step();
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    auto f = [&](std::size_t j, const Vector& x) -> Vector {
      return (c.A - c.G * P.samples[j]) * x;
    };
    const Vector& x = xi.back();
    const Vector k1 = f(2 * k, x);
    const Vector k2 = f(2 * k + 1, x + 0.5 * h * k1);
    const Vector k3 = f(2 * k + 1, x + 0.5 * h * k2);
    const Vector k4 = f(2 * k + 2, x + h * k3);
    xi.push_back(x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4));
  }
  return xi;
}

TEST(Shooting, ZeroInitialMean) {
  ProblemSpec spec = testing::example1(0.5);
  spec.x0_mean.setZero();
  const FBSolution sol = solve_newric_shooting(spec, make_grid(spec));
  for (std::size_t k = 0; k < sol.xi.size(); ++k) {
    EXPECT_EQ(sol.xi[k].norm(), 0.0);
    EXPECT_EQ(sol.eta[k].norm(), 0.0);
  }
}

TEST(Shooting, FirstExampleBeforeSingularity) {
  const ProblemSpec spec = testing::example1(0.5);
  const FBSolution sol = solve_newric_shooting(spec, make_grid(spec));
  EXPECT_LT(sol.boundary_residual, 1e-8);
  EXPECT_LT(sol.ode_residual, 1e-6);
  EXPECT_LT(sol.condition, 1e6);
}

TEST(Shooting, ClassicalMeanPath) {
  Scalar s;
  s.A = 0.4;
  s.B = 1.5;
  s.Q = 2;
  s.Qbar = 0.7;
  s.S = 1;
  s.ST = 1;
  s.QT = 0.5;
  s.R = 0.8;
  s.x0 = 2;
  const ProblemSpec spec = s.spec();
  const TimeGrid grid(1.0, 1000);
  const FBSolution sol = solve_newric_shooting(spec, grid);
  EXPECT_LT(sup_diff(sol.xi, classical_mean(spec, grid)), 1e-6);

  std::mt19937_64 rng(11);
  const ProblemSpec multi = testing::random_classical(rng);
  const TimeGrid g2(1.0, 1000);
  EXPECT_LT(sup_diff(solve_newric_shooting(multi, g2).xi, classical_mean(multi, g2)), 1e-6);
}

TEST(Scan, PaperDeterminants) {
  EXPECT_NEAR(det22(testing::example1(), 0.83), 0.1244555, 1e-4);
  EXPECT_NEAR(det22(testing::example1(), 0.86), -0.1295142, 1e-4);
  EXPECT_NEAR(det22(testing::example2(), 1.0), -0.3582768, 1e-4);
}

TEST(Scan, IndependentOracleValues) {
  // Eight-digit values from an independent high-precision integration.
  EXPECT_NEAR(det22(testing::example1(), 0.83), 0.12445553, 1e-8);
  EXPECT_NEAR(det22(testing::example1(), 0.86), -0.12951423, 1e-8);
  EXPECT_NEAR(det22(testing::example2(), 1.0), -0.35827678, 1e-8);
}

TEST(Scan, BracketAndRefinement) {
  const ProblemSpec spec = testing::example1();
  const ScanReport rep = existence_scan(spec, 1.0, 1000);
  ASSERT_EQ(rep.sign_change_brackets.size(), 1u);
  const auto [lo, hi] = rep.sign_change_brackets[0];
  EXPECT_GE(lo, 0.83);
  EXPECT_LE(hi, 0.86);
  const double T0 = refine_singular_horizon(spec, rep.sign_change_brackets[0]);
  EXPECT_NEAR(T0, 0.8452175132, 1e-6);
  const Matrix phi = transition_matrix(spec, T0);
  EXPECT_NEAR(phi.block(2, 0, 2, 2).determinant(), 0.674576, 1e-4);
}

TEST(Scan, ZeroCoefficients) {
  const ProblemSpec spec = zero_problem(2, 2, 1.0);
  const ScanReport rep = existence_scan(spec, 1.0, 50);
  for (double d : rep.det22) EXPECT_EQ(d, 1.0);
  EXPECT_TRUE(rep.sign_change_brackets.empty());
  EXPECT_EQ(transition_matrix(spec, 0.7), Matrix::Identity(4, 4));
}

TEST(Scan, CsvHeader) {
  std::ostringstream out;
  write_csv(out, existence_scan(testing::example1(), 1.0, 4));
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "t,det_phi22,det_phi21");
}

TEST(Shooting, SingularAtRefinedHorizon) {
  const ProblemSpec spec = testing::example1();
  const ScanReport rep = existence_scan(spec, 1.0, 1000);
  const double T0 = refine_singular_horizon(spec, rep.sign_change_brackets.at(0), 0.0);
  const ProblemSpec at_T0 = testing::example1(T0);
  try {
    solve_newric_shooting(at_T0, make_grid(at_T0));
    FAIL() << "expected SingularShootingMatrix";
  } catch (const SingularShootingMatrix& e) {
    EXPECT_GT(e.condition(), kSingularCondition);
  }
}

TEST(FixedPoint, DecoupledConvergesImmediately) {
  std::mt19937_64 rng(3);
  const ProblemSpec spec = testing::random_classical(rng);
  const TimeGrid grid = make_grid(spec, 400);
  const FBSolution fp = fixed_point_iterate(spec, grid);
  EXPECT_EQ(fp.iterations, 1);
  EXPECT_LT(sup_diff(fp.xi, solve_newric_shooting(spec, grid).xi), 1e-9);
}

TEST(FixedPoint, AgreesWithShootingUnderContraction) {
  Scalar s;
  s.A = -0.3;
  s.Abar = 0.4;
  s.Q = 1;
  s.Qbar = 0.3;
  s.S = 0.5;
  s.QT = 1;
  s.QbarT = 0.2;
  s.ST = 0.5;
  const ProblemSpec spec = s.spec();
  const TimeGrid grid = make_grid(spec, 1000);
  const FBSolution fp = fixed_point_iterate(spec, grid);
  EXPECT_GT(fp.iterations, 1);
  EXPECT_LT(fp.contraction_ratio, 1.0);
  EXPECT_LT(sup_diff(fp.xi, solve_newric_shooting(spec, grid).xi), 1e-6);
}

TEST(FixedPoint, FailsAtSingularHorizon) {
  const ProblemSpec spec = testing::example1();
  const double T0 = refine_singular_horizon(
      spec, existence_scan(spec, 1.0, 1000).sign_change_brackets.at(0));
  const ProblemSpec at_T0 = testing::example1(T0);
  EXPECT_THROW(fixed_point_iterate(at_T0, make_grid(at_T0), 1e-10, 200), NoConvergence);
}

TEST(ControlLaw, DecoupledOffsetVanishes) {
  Scalar s;
  s.A = 0.2;
  s.Q = 1;
  s.QT = 1;
  s.S = 1;
  s.ST = 1;
  const ProblemSpec spec = s.spec();
  const TimeGrid grid(1.0, 500);
  const FBSolution fb = solve_newric_shooting(spec, grid);
  const RiccatiPath Xi = solve_symmetric(spec, grid, fb.xi);
  const FeedbackLaw law = equilibrium_control_law(spec, fb, Xi.gamma);
  for (const auto& k : law.k) EXPECT_LT(k.norm(), 1e-8);
}

TEST(ControlLaw, OffsetMatchesZetaEquation) {
  Scalar s;
  s.A = -0.5;
  s.Abar = 0.8;
  s.Q = 1;
  s.Qbar = 0.5;
  s.S = 0.5;
  s.QT = 1;
  s.QbarT = 0.5;
  s.ST = 0.5;
  const ProblemSpec spec = s.spec();
  const TimeGrid grid(1.0, 1000);
  const FBSolution fb = solve_newric_shooting(spec, grid);
  const RiccatiPath Xi = solve_symmetric(spec, grid, fb.xi);
  const FeedbackLaw law = equilibrium_control_law(spec, fb, Xi.gamma);
  EXPECT_LT(sup_diff(law.k, *Xi.aux), 1e-7);
  // Terminal values: k_T = η_T − Ξ_T ξ_T with Ξ_T = Q_T + Q̄_T.
  const double xiT = fb.xi.back()(0);
  EXPECT_NEAR(law.k.back()(0), (1 + 0.25) * xiT - 1.5 * xiT, 1e-10);
}

}  // namespace
}  // namespace lqmfg
