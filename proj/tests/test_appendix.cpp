#include <gtest/gtest.h>

#include <cmath>

#include "lqmfg/appendix.hpp"
#include "lqmfg/errors.hpp"

namespace lqmfg {
namespace {

TEST(HcmRiccati, TanhAndTerminal) {
  AppendixParams p;
  const TimeGrid g(1.0, 1000);
  const HcmRiccati h = appendix_hcm_riccati(p, g);
  EXPECT_EQ(h.Pi.back(), 0.0);
  EXPECT_NEAR(h.Pi.front(), 0.7615941559, 1e-8);
  for (double v : h.Pi) EXPECT_LT(p.b * v, 1.0);
}

TEST(HcmRiccati, PhiIsExponentialOfIntegral) {
  AppendixParams p;
  p.a = 0.4;
  p.b = 2;
  const TimeGrid g(1.0, 200);
  const HcmRiccati h = appendix_hcm_riccati(p, g);
  EXPECT_DOUBLE_EQ(h.Phi(5, 5), 1.0);
  EXPECT_NEAR(h.Phi(3, 7) * h.Phi(7, 3), 1.0, 1e-14);
}

TEST(HcmCondition, VanishesWithoutCoupling) {
  AppendixParams p;
  const HcmCondition c = appendix_hcm_condition(p, TimeGrid(1.0, 200));
  EXPECT_EQ(c.lhs, 0.0);
  EXPECT_TRUE(c.satisfied);
}

TEST(HcmCondition, ClosedFormBoundsNumericFromBelow) {
  for (double gamma : {-5.0, -1.0, 0.5, 2.0}) {
    for (double b : {0.5, 1.0, 2.0}) {
      AppendixParams p;
      p.gamma = gamma;
      p.b = b;
      p.T = 3.0;
      const HcmCondition c = appendix_hcm_condition(p, TimeGrid(p.T, 3000));
      ASSERT_TRUE(c.closed_form_applicable);
      EXPECT_GE(c.lhs, c.closed_form_sup - 1e-9);
      EXPECT_GE(c.simplified, c.closed_form_sup);
      EXPECT_NEAR(c.simplified, std::abs(gamma) * (1 - std::exp(-b * p.T)), 1e-14);
    }
  }
}

TEST(HcmCondition, LongHorizonComparison) {
  AppendixParams p;
  p.gamma = -5;
  p.T = 10;
  p.eta = 1;
  const TimeGrid g(p.T, 4000);
  const HcmCondition c = appendix_hcm_condition(p, g);
  EXPECT_NEAR(c.simplified, 4.99977, 1e-5);
  EXPECT_FALSE(c.simplified_satisfied);
  EXPECT_FALSE(c.satisfied);
  EXPECT_TRUE(appendix_bsyy(p, g).gamma_condition);
}

TEST(Bsyy, TanhWhenGammaZero) {
  AppendixParams p;
  const TimeGrid g(1.0, 1000);
  const BsyyResult r = appendix_bsyy(p, g);
  EXPECT_EQ(r.P.back(), 0.0);
  EXPECT_EQ(r.rho.back(), 0.0);
  ASSERT_TRUE(r.roots);
  EXPECT_DOUBLE_EQ(r.roots->first, 1.0);
  EXPECT_DOUBLE_EQ(r.roots->second, -1.0);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(r.P[k], std::tanh(1 - g[k]), 1e-7);
  ASSERT_TRUE(r.closed_form_error);
  EXPECT_LT(*r.closed_form_error, 1e-7);
}

TEST(Bsyy, GammaOneIsEquilibrium) {
  AppendixParams p;
  p.gamma = 1;
  const BsyyResult r = appendix_bsyy(p, TimeGrid(1.0, 100));
  for (double v : r.P) EXPECT_EQ(v, 0.0);
}

TEST(Bsyy, MeanSystemResidual) {
  AppendixParams p;
  p.a = -0.3;
  p.alpha = 0.2;
  p.gamma = 0.4;
  p.eta = 1.5;
  const BsyyResult r = appendix_bsyy(p, TimeGrid(1.0, 1000));
  EXPECT_EQ(r.zbar.front(), 0.0);
  EXPECT_LT(r.mean_residual, 1e-8);
}

TEST(Bsyy, ClosedFormNeedsDistinctRoots) {
  AppendixParams p;
  p.gamma = 1;
  EXPECT_THROW(bsyy_closed_form_P(p, 0.0), DistinctRootsViolated);
}

}  // namespace
}  // namespace lqmfg
