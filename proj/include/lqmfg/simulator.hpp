#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "lqmfg/coeffs.hpp"
#include "lqmfg/fbsolver.hpp"

namespace lqmfg {

struct SimConfig {
  std::vector<int> N_values{10, 50, 250, 1250};
  int paths = 200;
  std::uint64_t seed = 20240601;
  double dt = 0.01;
  /// Covariance of the Gaussian initial state (mean is spec.x0_mean). Empty
  /// means deterministic.
  Matrix x0_cov;
  /// Each Euler increment is the sum of this many finer Gaussian increments,
  /// so runs with dt and dt/2 (twice the substeps) share one Brownian path.
  int noise_substeps = 1;
  /// Worker threads for replications; 0 means one per hardware thread.
  /// LQMFG_THREADS caps it (0 = sequential).
  int threads = 0;

  /// Throws InvalidProblem when dt does not divide T or counts are too small.
  std::size_t steps(double T) const;
};

/// Equilibrium law computed with `law_steps` grid steps: shooting for
/// (ξ, η), then Ξ from the symmetric Riccati equation.
FeedbackLaw equilibrium_law(const ProblemSpec& spec,
                            std::size_t law_steps = kDefaultSteps);

/// Initial states and Wiener increments of N players in one replication.
struct ReplicationNoise {
  Matrix x0;               // n × N
  std::vector<Matrix> dW;  // per Euler step, n × N
};

ReplicationNoise draw_noise(const ProblemSpec& spec, const SimConfig& cfg,
                            int N, std::size_t replication);

/// Control of player 1; every other player keeps the equilibrium law.
/// v¹ = θ · u_law(x¹), with `law` defaulting to the equilibrium law.
struct Deviation {
  double theta = 1.0;
  const FeedbackLaw* law = nullptr;
};

struct PlayerPaths {
  TimeGrid grid;
  std::vector<Matrix> states;  // per node, n × N
  Vector costs;                // realized cost of each player
};

/// Euler–Maruyama run of the coupled N-player system under the feedback law
/// (each player feeds back on its own state). Throws NumericalBlowUp with the
/// step index on a non-finite state.
PlayerPaths simulate_nplayer(const ProblemSpec& spec, const FeedbackLaw& law,
                             const SimConfig& cfg, int N,
                             std::size_t replication = 0,
                             const Deviation& deviation = {});
PlayerPaths simulate_nplayer(const ProblemSpec& spec, const FeedbackLaw& law,
                             const SimConfig& cfg, const ReplicationNoise& noise,
                             const Deviation& deviation = {});

/// The decoupled limit system: the empirical mean of the others is replaced
/// by the mean path, evolved with the same Euler scheme.
PlayerPaths simulate_limit(const ProblemSpec& spec, const FeedbackLaw& law,
                           const SimConfig& cfg, const ReplicationNoise& noise);

struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
};

/// Ordinary least squares of log y on log x.
SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct RateReport {
  struct Row {
    int N = 0;
    double gap_mean = 0.0, gap_stderr = 0.0;
    double cost_gap_mean = 0.0, cost_gap_stderr = 0.0;
  };
  std::vector<Row> rows;
  SlopeFit gap_slope, cost_slope;
};

/// For each N: E[sup_t ‖y^i − ŷ^i‖²] averaged over players, and E|𝒥¹ − J¹|,
/// with standard errors across replications; plus log-log slopes.
RateReport mckean_gap(const ProblemSpec& spec, const SimConfig& cfg);
RateReport mckean_gap(const ProblemSpec& spec, const FeedbackLaw& law,
                      const SimConfig& cfg);

struct ProbeReport {
  struct Row {
    std::string label;
    double theta = 1.0;
    double cost_diff = 0.0;
    double std_error = 0.0;
  };
  int N = 0;
  std::vector<Row> rows;
  double min_gap = 0.0;
  /// Three times the largest standard error over the family.
  double epsilon = 0.0;

  bool epsilon_nash() const { return min_gap >= -epsilon; }
};

inline const std::vector<double> kDefaultThetas{0.0, 0.5, 0.9, 1.1, 1.5, 2.0};

/// Player 1 deviates to θ·u¹ for each θ and to the best response against the
/// frozen mean path; reports 𝒥¹(v¹, u, …) − 𝒥¹(u, …) under common random
/// numbers.
ProbeReport epsilon_nash_probe(const ProblemSpec& spec, const SimConfig& cfg, int N,
                               const std::vector<double>& thetas = kDefaultThetas,
                               bool include_best_response = true);
ProbeReport epsilon_nash_probe(const ProblemSpec& spec, const FeedbackLaw& law,
                               const SimConfig& cfg, int N,
                               const std::vector<double>& thetas = kDefaultThetas,
                               bool include_best_response = true);

/// `N,gap_mean,gap_stderr,cost_gap_mean,cost_gap_stderr`.
void write_csv(std::ostream& out, const RateReport& report);
/// `theta,cost_diff,stderr`.
void write_csv(std::ostream& out, const ProbeReport& report);

/// Scalar benchmark used by the Monte Carlo checks.
ProblemSpec benchmark_spec();
SimConfig benchmark_config();

}  // namespace lqmfg
