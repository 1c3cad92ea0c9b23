#include "lqmfg/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

#include "lqmfg/csv.hpp"
#include "lqmfg/errors.hpp"
#include "lqmfg/odecore.hpp"
#include "lqmfg/riccati.hpp"
#include "lqmfg/rng.hpp"

namespace lqmfg {

namespace {

// Everything a single Euler run needs, sampled on the simulation grid.
struct Context {
  TimeGrid grid;
  std::size_t stride = 1;
  int n = 1;
  SampledCoefficients c;
  std::vector<Matrix> gain;
  VectorPath offset;
  // Mean path evolved by the same Euler scheme as the players, so that the
  // limit system is unbiased with respect to it.
  VectorPath mean;
};

void sample_law(const FeedbackLaw& law, const Context& ctx, std::vector<Matrix>& gain,
                VectorPath& offset) {
  if (!(law.grid.end() == ctx.grid.end()) ||
      law.grid.steps() != ctx.grid.steps() * ctx.stride) {
    throw InvalidProblem("feedback law grid is not compatible with the simulation step");
  }
  gain.clear();
  offset.clear();
  for (std::size_t j = 0; j < ctx.grid.size(); ++j) {
    gain.push_back(law.gain[j * ctx.stride]);
    offset.push_back(law.offset[j * ctx.stride]);
  }
}

Context make_context(const ProblemSpec& spec, const FeedbackLaw& law,
                     const SimConfig& cfg) {
  require_valid(spec);
  const std::size_t steps = cfg.steps(spec.T);
  if (law.grid.steps() % steps != 0 ||
      std::abs(law.grid.end() - spec.T) > 1e-12 * std::max(1.0, spec.T)) {
    throw InvalidProblem("feedback law grid is not compatible with the simulation step");
  }
  const TimeGrid grid(law.grid.end(), steps);
  Context ctx{grid, law.grid.steps() / steps, spec.n, sample_coefficients(spec, grid),
              {}, {}, {}};
  sample_law(law, ctx, ctx.gain, ctx.offset);

  const double dt = ctx.grid.step();
  ctx.mean.push_back(spec.x0_mean);
  for (std::size_t j = 0; j < steps; ++j) {
    const Vector& m = ctx.mean.back();
    const Vector v = -(ctx.gain[j] * m + ctx.offset[j]);
    ctx.mean.push_back(m + dt * (ctx.c.A[j] * m + ctx.c.B[j] * v + ctx.c.Abar[j] * m));
  }
  return ctx;
}

// ½(x*Qx + v*Rv + d*Q̄d), d = x − S·m, column-wise.
Eigen::RowVectorXd running_cost(const Context& ctx, std::size_t j, const Matrix& X,
                                const Matrix& V, const Matrix& M) {
  const Matrix D = X - ctx.c.S[j] * M;
  return 0.5 * ((X.array() * (ctx.c.Q[j] * X).array()).colwise().sum() +
                (V.array() * (ctx.c.R[j] * V).array()).colwise().sum() +
                (D.array() * (ctx.c.Qbar[j] * D).array()).colwise().sum());
}

Eigen::RowVectorXd terminal_cost(const Context& ctx, const Matrix& X, const Matrix& M) {
  const Matrix D = X - ctx.c.ST * M;
  return 0.5 * ((X.array() * (ctx.c.QT * X).array()).colwise().sum() +
                (D.array() * (ctx.c.QbarT * D).array()).colwise().sum());
}

// Means of the other players, column i excluding player i.
Matrix others_mean(const Matrix& X) {
  const Eigen::Index N = X.cols();
  const Vector sum = X.rowwise().sum();
  return (sum.replicate(1, N) - X) / static_cast<double>(N - 1);
}

PlayerPaths run(const Context& ctx, const ReplicationNoise& noise, bool coupled,
                const Deviation& dev) {
  const Eigen::Index N = noise.x0.cols();
  if (noise.x0.rows() != ctx.n || noise.dW.size() != ctx.grid.steps()) {
    throw DimensionMismatch("simulation noise does not match the problem");
  }
  if (coupled && N < 2) throw InvalidProblem("the N-player game needs N >= 2");

  std::vector<Matrix> dev_gain;
  VectorPath dev_offset;
  const bool deviates = dev.theta != 1.0 || dev.law != nullptr;
  if (dev.law) sample_law(*dev.law, ctx, dev_gain, dev_offset);
  const std::vector<Matrix>& g1 = dev.law ? dev_gain : ctx.gain;
  const VectorPath& o1 = dev.law ? dev_offset : ctx.offset;

  auto control = [&](std::size_t j, const Matrix& X) {
    Matrix V = -(ctx.gain[j] * X);
    V.colwise() -= ctx.offset[j];
    if (deviates) V.col(0) = -dev.theta * (g1[j] * X.col(0) + o1[j]);
    return V;
  };
  auto mean_field = [&](std::size_t j, const Matrix& X) -> Matrix {
    return coupled ? others_mean(X) : Matrix(ctx.mean[j].replicate(1, N));
  };

  const std::size_t K = ctx.grid.steps();
  const double dt = ctx.grid.step();
  PlayerPaths out{ctx.grid, {}, Vector::Zero(N)};
  out.states.reserve(K + 1);
  out.states.push_back(noise.x0);

  Eigen::RowVectorXd integral = Eigen::RowVectorXd::Zero(N);
  Eigen::RowVectorXd prev;
  for (std::size_t j = 0; j <= K; ++j) {
    const Matrix& X = out.states[j];
    const Matrix V = control(j, X);
    const Matrix M = mean_field(j, X);
    const Eigen::RowVectorXd f = running_cost(ctx, j, X, V, M);
    if (j > 0) integral += 0.5 * dt * (prev + f);
    prev = f;
    if (j == K) {
      integral += terminal_cost(ctx, X, M);
      break;
    }
    Matrix next = X + dt * (ctx.c.A[j] * X + ctx.c.B[j] * V + ctx.c.Abar[j] * M) +
                  ctx.c.sigma[j] * noise.dW[j];
    if (!next.allFinite()) {
      throw NumericalBlowUp(j + 1, "simulation produced a non-finite state at step " +
                                       std::to_string(j + 1));
    }
    out.states.push_back(std::move(next));
  }
  out.costs = integral.transpose();
  return out;
}

int worker_count(const SimConfig& cfg) {
  int threads = cfg.threads > 0 ? cfg.threads
                                : static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LQMFG_THREADS")) {
    threads = std::min(threads, std::max(0, std::atoi(env)));
  }
  return std::max(1, threads);
}

// Runs body(i) for i in [0, count); results must be written by index.
template <class Body>
void parallel_for(std::size_t count, int threads, Body body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(std::min<std::size_t>(threads, count));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  const double n = static_cast<double>(v.size());
  for (double x : v) out.mean += x;
  out.mean /= n;
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

FeedbackLaw best_response_law(const ProblemSpec& spec, const FeedbackLaw& law) {
  const RiccatiPath r = solve_symmetric(spec, law.grid, law.xi);
  const SampledCoefficients c = sample_coefficients(spec, law.grid);
  FeedbackLaw out{law.grid, {}, {}, *r.aux, law.xi};
  for (std::size_t k = 0; k < law.grid.size(); ++k) {
    const Matrix RB = c.Rinv[k] * c.B[k].transpose();
    out.gain.push_back(RB * r.gamma[k]);
    out.offset.push_back(RB * (*r.aux)[k]);
  }
  return out;
}

}  // namespace

std::size_t SimConfig::steps(double T) const {
  if (!(dt > 0.0)) throw InvalidProblem("simulation: dt must be positive");
  const double ratio = T / dt;
  const double K = std::round(ratio);
  if (K < 1.0 || std::abs(K * dt - T) > 1e-9) {
    throw InvalidProblem("simulation: dt must divide T");
  }
  if (paths < 1) throw InvalidProblem("simulation: paths must be at least 1");
  if (noise_substeps < 1) throw InvalidProblem("simulation: noise_substeps must be >= 1");
  for (int N : N_values) {
    if (N < 2) throw InvalidProblem("simulation: every N must be at least 2");
  }
  return static_cast<std::size_t>(K);
}

FeedbackLaw equilibrium_law(const ProblemSpec& spec, std::size_t law_steps) {
  const TimeGrid grid = make_grid(spec, law_steps);
  const FBSolution fb = solve_newric_shooting(spec, grid);
  const RiccatiPath xi = solve_symmetric(spec, grid, fb.xi);
  if (xi.blow_up) throw NumericalBlowUp(*xi.blow_up, "symmetric Riccati equation blew up");
  return equilibrium_control_law(spec, fb, xi.gamma);
}

ReplicationNoise draw_noise(const ProblemSpec& spec, const SimConfig& cfg, int N,
                            std::size_t replication) {
  const std::size_t K = cfg.steps(spec.T);
  const int n = spec.n;
  const int sub = cfg.noise_substeps;
  const double scale = std::sqrt(cfg.dt / sub);
  Matrix L = Matrix::Zero(n, n);
  if (cfg.x0_cov.size() != 0) {
    if (cfg.x0_cov.rows() != n || cfg.x0_cov.cols() != n) {
      throw DimensionMismatch("simulation: x0 covariance must be n x n");
    }
    L = psd_sqrt(cfg.x0_cov);
  }
  ReplicationNoise out{Matrix(n, N), std::vector<Matrix>(K, Matrix::Zero(n, N))};
  Vector z(n);
  for (int i = 0; i < N; ++i) {
    Rng rng(stream_key(cfg.seed, static_cast<std::uint64_t>(i), replication));
    for (int r = 0; r < n; ++r) z(r) = rng.normal();
    out.x0.col(i) = spec.x0_mean + L * z;
    for (std::size_t j = 0; j < K; ++j) {
      for (int s = 0; s < sub; ++s) {
        for (int r = 0; r < n; ++r) out.dW[j](r, i) += rng.normal();
      }
      out.dW[j].col(i) *= scale;
    }
  }
  return out;
}

PlayerPaths simulate_nplayer(const ProblemSpec& spec, const FeedbackLaw& law,
                             const SimConfig& cfg, int N, std::size_t replication,
                             const Deviation& deviation) {
  return simulate_nplayer(spec, law, cfg, draw_noise(spec, cfg, N, replication),
                          deviation);
}

PlayerPaths simulate_nplayer(const ProblemSpec& spec, const FeedbackLaw& law,
                             const SimConfig& cfg, const ReplicationNoise& noise,
                             const Deviation& deviation) {
  return run(make_context(spec, law, cfg), noise, true, deviation);
}

PlayerPaths simulate_limit(const ProblemSpec& spec, const FeedbackLaw& law,
                           const SimConfig& cfg, const ReplicationNoise& noise) {
  return run(make_context(spec, law, cfg), noise, false, {});
}

SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw DimensionMismatch("loglog_slope: need at least two matching points");
  }
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  if (n < 3) {
    fit.std_error = std::nan("");
    return fit;
  }
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - my - fit.slope * (lx[i] - mx);
    ssr += r * r;
  }
  fit.std_error = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  return fit;
}

RateReport mckean_gap(const ProblemSpec& spec, const SimConfig& cfg) {
  return mckean_gap(spec, equilibrium_law(spec), cfg);
}

RateReport mckean_gap(const ProblemSpec& spec, const FeedbackLaw& law,
                      const SimConfig& cfg) {
  const Context ctx = make_context(spec, law, cfg);
  const int threads = worker_count(cfg);
  const std::size_t P = static_cast<std::size_t>(cfg.paths);
  RateReport report;
  std::vector<double> Ns, gaps, cost_gaps;
  for (int N : cfg.N_values) {
    std::vector<double> gap(P), cost_gap(P);
    parallel_for(P, threads, [&](std::size_t k) {
      const ReplicationNoise noise = draw_noise(spec, cfg, N, k);
      const PlayerPaths y = run(ctx, noise, true, {});
      const PlayerPaths yhat = run(ctx, noise, false, {});
      Eigen::RowVectorXd sup = Eigen::RowVectorXd::Zero(N);
      for (std::size_t j = 0; j < y.states.size(); ++j) {
        sup = sup.cwiseMax((y.states[j] - yhat.states[j]).colwise().squaredNorm());
      }
      gap[k] = sup.mean();
      // Every player has the same law, so averaging over players estimates
      // E|𝒥¹ − J¹| with less variance.
      cost_gap[k] = (y.costs - yhat.costs).cwiseAbs().mean();
    });
    const MeanSe g = mean_se(gap), c = mean_se(cost_gap);
    report.rows.push_back({N, g.mean, g.se, c.mean, c.se});
    Ns.push_back(N);
    gaps.push_back(g.mean);
    cost_gaps.push_back(c.mean);
  }
  const double nan = std::nan("");
  report.gap_slope = report.cost_slope = {nan, nan};
  if (Ns.size() >= 3) {
    const bool positive =
        std::all_of(gaps.begin(), gaps.end(), [](double v) { return v > 0.0; }) &&
        std::all_of(cost_gaps.begin(), cost_gaps.end(), [](double v) { return v > 0.0; });
    if (positive) {
      report.gap_slope = loglog_slope(Ns, gaps);
      report.cost_slope = loglog_slope(Ns, cost_gaps);
    }
  }
  return report;
}

ProbeReport epsilon_nash_probe(const ProblemSpec& spec, const SimConfig& cfg, int N,
                               const std::vector<double>& thetas,
                               bool include_best_response) {
  return epsilon_nash_probe(spec, equilibrium_law(spec), cfg, N, thetas,
                            include_best_response);
}

ProbeReport epsilon_nash_probe(const ProblemSpec& spec, const FeedbackLaw& law,
                               const SimConfig& cfg, int N,
                               const std::vector<double>& thetas,
                               bool include_best_response) {
  if (N < 2) throw InvalidProblem("epsilon_nash_probe: N must be at least 2");
  const Context ctx = make_context(spec, law, cfg);
  std::vector<Deviation> family;
  std::vector<ProbeReport::Row> rows;
  for (double theta : thetas) {
    family.push_back({theta, nullptr});
    rows.push_back({format_double(theta), theta, 0.0, 0.0});
  }
  std::optional<FeedbackLaw> best;
  if (include_best_response) {
    best = best_response_law(spec, law);
    family.push_back({1.0, &*best});
    rows.push_back({"best_response", std::nan(""), 0.0, 0.0});
  }

  const std::size_t P = static_cast<std::size_t>(cfg.paths);
  std::vector<std::vector<double>> diffs(family.size(), std::vector<double>(P));
  parallel_for(P, worker_count(cfg), [&](std::size_t k) {
    const ReplicationNoise noise = draw_noise(spec, cfg, N, k);
    const double base = run(ctx, noise, true, {}).costs(0);
    for (std::size_t f = 0; f < family.size(); ++f) {
      diffs[f][k] = run(ctx, noise, true, family[f]).costs(0) - base;
    }
  });

  ProbeReport report;
  report.N = N;
  report.min_gap = std::numeric_limits<double>::infinity();
  double max_se = 0.0;
  for (std::size_t f = 0; f < family.size(); ++f) {
    const MeanSe m = mean_se(diffs[f]);
    rows[f].cost_diff = m.mean;
    rows[f].std_error = m.se;
    report.min_gap = std::min(report.min_gap, m.mean);
    max_se = std::max(max_se, m.se);
  }
  report.rows = std::move(rows);
  report.epsilon = 3.0 * max_se;
  return report;
}

void write_csv(std::ostream& out, const RateReport& report) {
  CsvRow(out) << "N" << "gap_mean" << "gap_stderr" << "cost_gap_mean"
              << "cost_gap_stderr";
  for (const auto& r : report.rows) {
    CsvRow(out) << static_cast<double>(r.N) << r.gap_mean << r.gap_stderr
                << r.cost_gap_mean << r.cost_gap_stderr;
  }
}

void write_csv(std::ostream& out, const ProbeReport& report) {
  CsvRow(out) << "theta" << "cost_diff" << "stderr";
  for (const auto& r : report.rows) {
    CsvRow(out) << std::string_view(r.label) << r.cost_diff << r.std_error;
  }
}

ProblemSpec benchmark_spec() {
  ProblemSpec s = zero_problem(1, 1, 1.0);
  auto one = [](double v) { return Schedule::constant(Matrix::Constant(1, 1, v)); };
  s.A = one(-0.5);
  s.Abar = one(0.8);
  s.B = one(1.0);
  s.sigma = one(0.5);
  s.Q = one(1.0);
  s.Qbar = one(0.5);
  s.S = one(0.5);
  s.R = one(1.0);
  s.QT = Matrix::Constant(1, 1, 1.0);
  s.QbarT = Matrix::Constant(1, 1, 0.5);
  s.ST = Matrix::Constant(1, 1, 0.5);
  s.x0_mean = Vector::Constant(1, 1.0);
  return s;
}

SimConfig benchmark_config() {
  SimConfig cfg;
  cfg.x0_cov = Matrix::Constant(1, 1, 0.25);
  return cfg;
}

}  // namespace lqmfg
