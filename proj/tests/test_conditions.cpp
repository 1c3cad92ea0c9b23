#include <gtest/gtest.h>

#include <cmath>

#include "lqmfg/conditions.hpp"
#include "lqmfg/errors.hpp"
#include "lqmfg/riccati.hpp"
#include "test_support.hpp"

namespace lqmfg {
namespace {

using testing::Scalar;

TEST(SmallHorizon, ZeroProblem) {
  const ConditionReport rep = check_L(zero_problem(2, 2, 1.0));
  EXPECT_EQ(rep.L, 0.0);
  EXPECT_EQ(rep.find("L")->verdict, Verdict::kSatisfied);
}

TEST(SmallHorizon, ZeroPrefactor) {
  Scalar s;
  s.A = 3;
  s.Abar = 2;
  s.B = 4;
  s.Q = 0;
  s.QT = 0;
  EXPECT_EQ(compute_L(s.spec()), 0.0);
}

TEST(SmallHorizon, FirstExampleInconclusive) {
  const ConditionReport rep = check_L(testing::example1(0.83));
  EXPECT_GT(rep.L, 1.0);
  EXPECT_EQ(rep.find("L")->verdict, Verdict::kViolated);
}

TEST(MainCondition, NoCouplingSatisfied) {
  const ProblemSpec spec = testing::example1();
  ProblemSpec decoupled = spec;
  decoupled.Abar = Schedule::constant(Matrix::Zero(2, 2));
  const ConditionReport rep = compute_mainthm_norms(decoupled, make_grid(decoupled));
  EXPECT_EQ(rep.mainthm_lhs, 0.0);
  EXPECT_EQ(rep.find("mainthm")->verdict, Verdict::kSatisfied);
}

TEST(MainCondition, LargeSViolated) {
  Scalar s;
  s.Q = 1;
  s.QT = 1;
  s.Qbar = 3;
  s.S = 0;
  const ConditionReport rep = compute_mainthm_norms(s.spec(), TimeGrid(1.0, 200));
  EXPECT_GE(rep.s_norm, 1.0);
  EXPECT_EQ(rep.find("mainthm")->verdict, Verdict::kViolated);
}

TEST(MainCondition, HandEvaluatedScalar) {
  // A = 0, Q = Q_T = 1, S = I: φ ≡ 1 so ⦀φ⦀ = √(1+T), ⦀Ā⦀ = |c|.
  for (double T : {0.5, 1.0, 2.0}) {
    for (double c : {0.2, -0.5}) {
      Scalar s;
      s.Q = 1;
      s.QT = 1;
      s.S = 1;
      s.ST = 1;
      s.Abar = c;
      s.T = T;
      const ConditionReport rep = compute_mainthm_norms(s.spec(), TimeGrid(T, 400));
      EXPECT_NEAR(rep.phi_norm, std::sqrt(1 + T), 1e-9);
      EXPECT_NEAR(rep.abar_norm, std::abs(c), 1e-12);
      EXPECT_NEAR(rep.s_norm, 0.0, 1e-15);
      const double lhs = std::sqrt(T) * std::sqrt(1 + T) * std::abs(c);
      EXPECT_NEAR(rep.mainthm_lhs, lhs, 1e-9);
      EXPECT_EQ(rep.find("mainthm")->verdict,
                lhs < 1 ? Verdict::kSatisfied : Verdict::kViolated);
    }
  }
}

TEST(MainCondition, UndefinedWithoutPositiveWeight) {
  Scalar s;
  s.Abar = 0.5;
  s.Q = 0;
  const ConditionReport rep = compute_mainthm_norms(s.spec(), TimeGrid(1.0, 50));
  EXPECT_EQ(rep.find("mainthm")->verdict, Verdict::kUndefined);
  EXPECT_FALSE(rep.find("mainthm")->note.empty());
}

TEST(MainCondition, Borderline) {
  const ConditionEntry e = strict_less("x", 1.0 - 1e-10, 1.0);
  EXPECT_TRUE(e.borderline);
  EXPECT_EQ(e.verdict, Verdict::kSatisfied);
  EXPECT_EQ(strict_less("x", 1.0, 1.0).verdict, Verdict::kViolated);
}

TEST(Shifted, ReducesToMainCondition) {
  Scalar s;
  s.Q = 1.5;
  s.QT = 1;
  s.Abar = 0.3;
  s.Qbar = 0.4;
  s.S = 0.5;
  const ProblemSpec spec = s.spec();
  const TimeGrid g(1.0, 400);
  const ConditionReport main = compute_mainthm_norms(spec, g);
  const ConditionReport shifted = check_shifted(spec, spec.Q, g);
  EXPECT_NEAR(shifted.find("shifted")->lhs, main.mainthm_lhs, 1e-12);
}

TEST(Shifted, PositiveQcalWithoutCoupling) {
  Scalar s;
  s.Q = 0.5;
  s.Qbar = 1;
  s.S = 0.5;
  const ProblemSpec spec = s.spec();
  const Schedule Qcal = Schedule::constant(Matrix::Constant(1, 1, 0.5 + 0.5));
  const ConditionReport rep = check_shifted(spec, Qcal, TimeGrid(1.0, 100));
  EXPECT_EQ(rep.find("shifted")->lhs, 0.0);
  EXPECT_EQ(rep.find("shifted")->verdict, Verdict::kSatisfied);
}

TEST(Shifted, SingularQcalRejected) {
  ProblemSpec spec = zero_problem(2, 2, 1.0);
  const Schedule Qcal = Schedule::constant(testing::mat2(1, 0, 0, 0));
  EXPECT_THROW(check_shifted(spec, Qcal, TimeGrid(1.0, 10)), NotPositiveDefinite);
}

TEST(RiccatiSolvable, Branches) {
  Scalar s;
  s.Q = 1;
  s.QT = 1;
  s.Qbar = 0.5;  // s_norm = ⦀𝒮⦀ with S = 0 → 𝒮 = 0.5
  EXPECT_EQ(check_riccati_solvable(s.spec(), 1.0).find("riccati_solvable")->verdict,
            Verdict::kSatisfied);
  s.Qbar = 1.0;  // ⦀𝒮⦀ = 1 (with Q = 1, Q_T = 1, Q̄_T = 0)
  const ConditionReport rep = check_riccati_solvable(s.spec(), 1.0);
  EXPECT_NEAR(rep.s_norm, 1.0, 1e-12);
  EXPECT_NE(rep.find("riccati_solvable")->verdict, Verdict::kSatisfied);
}

TEST(RiccatiSolvable, CouplingWithinBoundAndRadonSucceeds) {
  Scalar s;
  s.Q = 1;
  s.QT = 1;
  s.S = 1;
  s.ST = 1;
  s.Abar = 0.3;
  s.T = 1.0;
  const ConditionReport rep = check_riccati_solvable(s.spec(), 1.0);
  ASSERT_EQ(rep.find("riccati_solvable")->verdict, Verdict::kSatisfied);
  EXPECT_NO_THROW(solve_nonsymmetric_radon(s.spec(), TimeGrid(1.0, 500)));
}

TEST(RiccatiSolvable, HorizonBeyondT0Violated) {
  Scalar s;
  s.Q = 1;
  s.QT = 1;
  s.S = 1;
  s.ST = 1;
  s.Abar = 0.01;
  s.T = 1.0;
  EXPECT_EQ(check_riccati_solvable(s.spec(), 0.5).find("riccati_solvable")->verdict,
            Verdict::kViolated);
}

TEST(Report, TextAndCsv) {
  ConditionReport rep = check_L(zero_problem(1, 1, 1.0));
  std::ostringstream out;
  rep.write_csv(out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "condition,lhs,threshold,verdict");
  EXPECT_NE(rep.to_text().find("satisfied"), std::string::npos);
}

}  // namespace
}  // namespace lqmfg
