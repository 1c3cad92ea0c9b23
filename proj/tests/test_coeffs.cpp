#include <gtest/gtest.h>

#include "lqmfg/coeffs.hpp"
#include "lqmfg/errors.hpp"
#include "test_support.hpp"

namespace lqmfg {
namespace {

using testing::mat2;
using testing::Scalar;

TEST(TimeGrid, NodesAndLookup) {
  const TimeGrid g(2.0, 8);
  EXPECT_EQ(g.size(), 9u);
  EXPECT_DOUBLE_EQ(g.step(), 0.25);
  EXPECT_DOUBLE_EQ(g[3], 0.75);
  EXPECT_EQ(g.index_of(1.5), 6u);
  EXPECT_FALSE(g.index_of(1.3).has_value());
}

TEST(TimeGrid, RefinedSoBreakpointsAreNodes) {
  const std::vector<double> bp{0.3, 0.7};
  const TimeGrid g = TimeGrid::with_breakpoints(1.0, 25, bp);
  EXPECT_GE(g.steps(), 25u);
  EXPECT_TRUE(g.index_of(0.3).has_value());
  EXPECT_TRUE(g.index_of(0.7).has_value());
}

TEST(Schedule, ConstantSamplesEverywhere) {
  const Matrix M = mat2(1, 2, 3, 4);
  const MatrixPath p = sample(Schedule::constant(M), TimeGrid(1.0, 7), 2, 2);
  for (const auto& s : p.samples) EXPECT_EQ(s, M);
}

TEST(Schedule, RightContinuous) {
  const Matrix M1 = Matrix::Constant(1, 1, 1.0), M2 = Matrix::Constant(1, 1, 2.0);
  const Schedule s = Schedule::piecewise({{0.0, M1}, {0.5, M2}});
  EXPECT_EQ(s.at(0.5), M2);
  EXPECT_EQ(s.at(0.49), M1);
  EXPECT_EQ(s.breakpoints(), std::vector<double>{0.5});
}

TEST(Schedule, RejectsBadPieces) {
  const Matrix M = Matrix::Identity(1, 1);
  EXPECT_THROW(Schedule::piecewise({{0.1, M}}), InvalidProblem);
  EXPECT_THROW(Schedule::piecewise({{0.0, M}, {0.0, M}}), InvalidProblem);
  EXPECT_THROW(Schedule::piecewise({{0.0, M}, {0.5, Matrix::Identity(2, 2)}}),
               DimensionMismatch);
}

TEST(Validate, SimpleScalarIsValid) {
  Scalar s;
  s.Q = 1;
  s.Qbar = 1;
  ProblemSpec spec = s.spec();
  spec.delta = 0.5;
  EXPECT_TRUE(validate(spec).ok()) << validate(spec).to_text();
}

TEST(Validate, RBelowDelta) {
  Scalar s;
  s.R = 0;
  ProblemSpec spec = s.spec();
  spec.delta = 0.1;
  const ValidationReport rep = validate(spec);
  ASSERT_FALSE(rep.ok());
  EXPECT_EQ(rep.violations[0].section, "R");
  EXPECT_NE(rep.violations[0].message.find("R ⪰ δI fails"), std::string::npos);
  EXPECT_THROW(require_valid(spec), InvalidProblem);
}

TEST(Validate, IndefiniteQNamesSection) {
  Scalar s;
  s.Q = -1;
  const ValidationReport rep = validate(s.spec());
  ASSERT_FALSE(rep.ok());
  EXPECT_EQ(rep.violations[0].section, "Q");
}

TEST(Validate, ShapeMismatch) {
  ProblemSpec spec = zero_problem(2, 1, 1.0);
  spec.B = Schedule::constant(Matrix::Zero(2, 2));
  const ValidationReport rep = validate(spec);
  ASSERT_FALSE(rep.ok());
  EXPECT_EQ(rep.violations[0].section, "B");
}

TEST(Validate, FirstPaperExampleIsValid) {
  EXPECT_TRUE(validate(testing::example1()).ok());
  EXPECT_TRUE(validate(testing::example2()).ok());
}

TEST(Symmetrize, WarnsAndUsesSymmetricPart) {
  ProblemSpec spec = zero_problem(2, 2, 1.0);
  spec.Q = Schedule::constant(mat2(1, 0.2, 0, 1));
  const ProblemSpec sym = symmetrized(spec);
  EXPECT_DOUBLE_EQ(sym.Q.at(0)(0, 1), 0.1);
  EXPECT_DOUBLE_EQ(sym.Q.at(0)(1, 0), 0.1);
  EXPECT_FALSE(sym.warnings.empty());
}

TEST(EffectiveS, IdentitySVanishes) {
  ProblemSpec spec = zero_problem(2, 2, 1.0);
  spec.Qbar = Schedule::constant(mat2(2, 1, 1, 3));
  spec.S = Schedule::constant(Matrix::Identity(2, 2));
  spec.QbarT = mat2(1, 0, 0, 1);
  spec.ST = Matrix::Identity(2, 2);
  const EffectiveS e = effective_S(spec, TimeGrid(1.0, 4));
  for (const auto& s : e.path.samples) EXPECT_EQ(s.norm(), 0.0);
  EXPECT_EQ(e.terminal.norm(), 0.0);
}

TEST(EffectiveS, ZeroQbarVanishes) {
  Scalar s;
  s.S = 0.3;
  const EffectiveS e = effective_S(s.spec(), TimeGrid(1.0, 4));
  for (const auto& v : e.path.samples) EXPECT_EQ(v(0, 0), 0.0);
}

TEST(EffectiveS, ScalarProduct) {
  Scalar s;
  s.Qbar = 2;
  s.S = 0.5;
  const EffectiveS e = effective_S(s.spec(), TimeGrid(1.0, 4));
  for (const auto& v : e.path.samples) EXPECT_DOUBLE_EQ(v(0, 0), 1.0);
}

TEST(SampledCoefficients, DerivedQuantities) {
  ProblemSpec spec = testing::example1();
  const SampledCoefficients c = sample_coefficients(spec, TimeGrid(1.0, 4));
  EXPECT_LT((c.Rinv[0] - mat2(2, 3.1, 3.1, 4.9)).norm(), 1e-12);
  EXPECT_LT((c.G[2] - mat2(2, 3.1, 3.1, 4.9)).norm(), 1e-12);
  EXPECT_EQ(c.Scal[1].norm(), 0.0);
}

TEST(CoefficientsAt, PiecewiseValue) {
  ProblemSpec spec = zero_problem(1, 1, 1.0);
  spec.A = Schedule::piecewise({{0.0, Matrix::Constant(1, 1, 1.0)},
                                {0.5, Matrix::Constant(1, 1, -1.0)}});
  EXPECT_EQ(coefficients_at(spec, 0.2).A(0, 0), 1.0);
  EXPECT_EQ(coefficients_at(spec, 0.5).A(0, 0), -1.0);
  const Schedule twice =
      derived_schedule(spec, [](const CoefficientsAt& c) -> Matrix { return 2 * c.A; });
  EXPECT_EQ(twice.pieces().size(), 2u);
  EXPECT_EQ(twice.at(0.7)(0, 0), -2.0);
}

}  // namespace
}  // namespace lqmfg
