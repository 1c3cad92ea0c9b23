#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lqmfg/errors.hpp"
#include "lqmfg/rng.hpp"
#include "lqmfg/simulator.hpp"
#include "test_support.hpp"

namespace lqmfg {
namespace {

using testing::Scalar;

FeedbackLaw constant_law(double T, std::size_t steps, double gain, double offset, double xi) {
  const TimeGrid g(T, steps);
  return FeedbackLaw{g, std::vector<Matrix>(g.size(), Matrix::Constant(1, 1, gain)),
                     VectorPath(g.size(), Vector::Constant(1, offset)),
                     VectorPath(g.size(), Vector::Zero(1)),
                     VectorPath(g.size(), Vector::Constant(1, xi))};
}

SimConfig small_config() {
  SimConfig cfg = benchmark_config();
  cfg.N_values = {5, 20, 80};
  cfg.paths = 40;
  cfg.dt = 0.02;
  return cfg;
}

TEST(Rng, DeterministicAndDistinctStreams) {
  Rng a(stream_key(1, 2, 3)), b(stream_key(1, 2, 3)), c(stream_key(1, 3, 2));
  for (int i = 0; i < 10; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    EXPECT_NE(x, c.normal());
  }
}

TEST(Rng, NormalMoments) {
  Rng r(stream_key(42, 0, 0));
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Simulate, ZeroStaysZero) {
  Scalar s;
  s.A = 0.7;
  s.Abar = 0.4;
  s.Q = 1;
  s.x0 = 0;
  const ProblemSpec spec = s.spec();
  SimConfig cfg;
  cfg.dt = 0.1;
  const PlayerPaths p = simulate_nplayer(spec, constant_law(1.0, 10, 0, 0, 0), cfg, 4);
  for (const auto& X : p.states) EXPECT_EQ(X.norm(), 0.0);
  EXPECT_EQ(p.costs.norm(), 0.0);
}

TEST(Simulate, NoiselessPlayersMoveTogether) {
  ProblemSpec spec = benchmark_spec();
  spec.sigma = testing::scalar(0.0);
  SimConfig cfg;
  cfg.dt = 0.01;
  const FeedbackLaw law = equilibrium_law(spec);
  const PlayerPaths p = simulate_nplayer(spec, law, cfg, 7);
  for (std::size_t j = 0; j < p.states.size(); ++j) {
    const Matrix& X = p.states[j];
    EXPECT_LT((X.array() - X(0, 0)).abs().maxCoeff(), 1e-13);
    EXPECT_NEAR(X(0, 0), law.xi[j * 20](0), 1e-2);
  }
  EXPECT_LT((p.costs.array() - p.costs(0)).abs().maxCoeff(), 1e-13);
}

TEST(Simulate, SingleEulerStepByHand) {
  Scalar s;
  s.A = 0.3;
  s.Abar = 0.5;
  s.B = 2;
  s.sigma = 0.4;
  s.Q = 1.5;
  s.Qbar = 0.8;
  s.S = 0.6;
  s.R = 0.7;
  s.QT = 1.1;
  s.QbarT = 0.9;
  s.ST = 0.2;
  s.T = 0.1;
  const ProblemSpec spec = s.spec();
  SimConfig cfg;
  cfg.dt = 0.1;
  const double g = 0.25, o = -0.1;
  const FeedbackLaw law = constant_law(0.1, 1, g, o, 0.0);
  ReplicationNoise noise{Matrix(1, 2), {Matrix(1, 2)}};
  noise.x0 << 1.0, 2.0;
  noise.dW[0] << 0.3, -0.1;
  const PlayerPaths p = simulate_nplayer(spec, law, cfg, noise);

  const double dt = 0.1;
  const double x0[2] = {1.0, 2.0}, dw[2] = {0.3, -0.1};
  double x1[2], cost[2];
  for (int i = 0; i < 2; ++i) {
    const double v = -(g * x0[i] + o);
    x1[i] = x0[i] + dt * (0.3 * x0[i] + 2 * v + 0.5 * x0[1 - i]) + 0.4 * dw[i];
  }
  for (int i = 0; i < 2; ++i) {
    auto f = [&](double x, double m) {
      const double v = -(g * x + o);
      return 0.5 * (1.5 * x * x + 0.7 * v * v + 0.8 * (x - 0.6 * m) * (x - 0.6 * m));
    };
    const double d = x1[i] - 0.2 * x1[1 - i];
    cost[i] = 0.5 * dt * (f(x0[i], x0[1 - i]) + f(x1[i], x1[1 - i])) +
              0.5 * (1.1 * x1[i] * x1[i] + 0.9 * d * d);
  }
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(p.states[1](0, i), x1[i], 1e-12);
    EXPECT_NEAR(p.costs(i), cost[i], 1e-12);
  }
}

TEST(Simulate, InvalidConfig) {
  const ProblemSpec spec = benchmark_spec();
  SimConfig cfg;
  cfg.dt = 0.03;
  EXPECT_THROW(cfg.steps(spec.T), InvalidProblem);
  cfg.dt = 0.01;
  cfg.N_values = {1};
  EXPECT_THROW(cfg.steps(spec.T), InvalidProblem);
}

TEST(Simulate, BlowUpReportsStep) {
  Scalar s;
  s.A = 1e6;
  s.sigma = 1;
  const ProblemSpec spec = s.spec();
  SimConfig cfg;
  cfg.dt = 0.01;
  try {
    simulate_nplayer(spec, constant_law(1.0, 100, 0, 0, 0), cfg, 3);
    FAIL() << "expected NumericalBlowUp";
  } catch (const NumericalBlowUp& e) {
    EXPECT_GT(e.index(), 0u);
    EXPECT_LE(e.index(), 100u);
  }
}

TEST(McKeanGap, NoiselessGapIsZero) {
  ProblemSpec spec = benchmark_spec();
  spec.sigma = testing::scalar(0.0);
  SimConfig cfg = small_config();
  cfg.x0_cov = Matrix();
  cfg.paths = 3;
  const RateReport rep = mckean_gap(spec, cfg);
  for (const auto& row : rep.rows) {
    EXPECT_LT(row.gap_mean, 1e-25);
    EXPECT_LT(row.cost_gap_mean, 1e-12);
  }
}

TEST(McKeanGap, DeterministicAcrossThreadCounts) {
  const ProblemSpec spec = benchmark_spec();
  SimConfig cfg = small_config();
  cfg.threads = 1;
  const RateReport a = mckean_gap(spec, cfg);
  cfg.threads = 4;
  const RateReport b = mckean_gap(spec, cfg);
  std::ostringstream sa, sb;
  write_csv(sa, a);
  write_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(sa.str().substr(0, sa.str().find('\n')),
            "N,gap_mean,gap_stderr,cost_gap_mean,cost_gap_stderr");
  for (const auto& row : a.rows) {
    EXPECT_GE(row.gap_mean, 0.0);
    EXPECT_GE(row.cost_gap_mean, 0.0);
  }
  EXPECT_LT(a.gap_slope.slope, 0.0);
}

TEST(Slope, ExactPowerLaw) {
  const SlopeFit f = loglog_slope({10, 100, 1000}, {1e-1, 1e-2, 1e-3});
  EXPECT_NEAR(f.slope, -1.0, 1e-12);
  EXPECT_NEAR(f.std_error, 0.0, 1e-12);
}

TEST(Probe, EquilibriumSelfDeviationIsExactlyZero) {
  const ProblemSpec spec = benchmark_spec();
  SimConfig cfg = small_config();
  const ProbeReport rep = epsilon_nash_probe(spec, cfg, 20, {1.0, 2.0}, true);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_EQ(rep.rows[0].cost_diff, 0.0);
  EXPECT_EQ(rep.rows[0].std_error, 0.0);
  EXPECT_GT(rep.rows[1].cost_diff, 5 * rep.rows[1].std_error);
  EXPECT_EQ(rep.rows[2].label, "best_response");
  EXPECT_LT(std::abs(rep.rows[2].cost_diff), 1e-6);
  std::ostringstream out;
  write_csv(out, rep);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "theta,cost_diff,stderr");
}

TEST(Exchangeability, FirstAndLastPlayerCostsAgree) {
  const ProblemSpec spec = benchmark_spec();
  SimConfig cfg = benchmark_config();
  const FeedbackLaw law = equilibrium_law(spec);
  const int N = 10, P = 300;
  std::vector<double> first, last;
  for (int k = 0; k < P; ++k) {
    const PlayerPaths p = simulate_nplayer(spec, law, cfg, N, k);
    first.push_back(p.costs(0));
    last.push_back(p.costs(N - 1));
  }
  auto mean_var = [](const std::vector<double>& v) {
    double m = 0, s = 0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) s += (x - m) * (x - m);
    return std::make_pair(m, s / (v.size() - 1));
  };
  const auto [m1, v1] = mean_var(first);
  const auto [m2, v2] = mean_var(last);
  EXPECT_LT(std::abs(m1 - m2), 3 * std::sqrt((v1 + v2) / P));
}

TEST(EulerMaruyama, HalvingStepWithinStandardError) {
  const ProblemSpec spec = benchmark_spec();
  const FeedbackLaw law = equilibrium_law(spec);
  SimConfig coarse = benchmark_config();
  coarse.dt = 0.02;
  coarse.noise_substeps = 2;
  SimConfig fine = benchmark_config();
  fine.dt = 0.01;
  const int N = 10, P = 200;
  double diff = 0, mean = 0, sq = 0;
  for (int k = 0; k < P; ++k) {
    const double a = simulate_nplayer(spec, law, coarse, N, k).costs.mean();
    const double b = simulate_nplayer(spec, law, fine, N, k).costs.mean();
    diff += a - b;
    mean += b;
    sq += b * b;
  }
  diff /= P;
  mean /= P;
  const double se = std::sqrt((sq / P - mean * mean) / (P - 1));
  EXPECT_LT(std::abs(diff), se);
}

}  // namespace
}  // namespace lqmfg
