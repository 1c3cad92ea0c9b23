#include "lqmfg/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lqmfg/appendix.hpp"
#include "lqmfg/conditions.hpp"
#include "lqmfg/config.hpp"
#include "lqmfg/csv.hpp"
#include "lqmfg/errors.hpp"
#include "lqmfg/fbsolver.hpp"
#include "lqmfg/mftype.hpp"
#include "lqmfg/riccati.hpp"
#include "lqmfg/simulator.hpp"

namespace lqmfg {

namespace {

std::string fmt(double v) { return format_double(v); }

class Runner {
 public:
  Runner(const Command& cmd, std::ostream& out) : cmd_(cmd), out_(out) {}

  int dispatch() {
    cfg_ = load_config(cmd_.config_path);
    if (cmd_.verb == "validate") return validate_verb();
    require_valid(cfg_.spec);
    if (cmd_.verb == "check") return check();
    if (cmd_.verb == "solve") return solve();
    if (cmd_.verb == "riccati") return riccati();
    if (cmd_.verb == "scan") return scan();
    if (cmd_.verb == "mftype") return mftype();
    if (cmd_.verb == "compare") return compare();
    if (cmd_.verb == "simulate") return simulate();
    if (cmd_.verb == "appendix") return appendix();
    throw InvalidProblem("unknown verb '" + cmd_.verb + "'");
  }

 private:
  const ProblemSpec& spec() const { return cfg_.spec; }
  std::size_t steps() const { return cmd_.steps.value_or(kDefaultSteps); }
  TimeGrid grid() const { return make_grid(spec(), steps()); }

  template <class F>
  void write_file(const std::string& name, F write) {
    std::filesystem::create_directories(cmd_.output_dir);
    const std::filesystem::path path = std::filesystem::path(cmd_.output_dir) / name;
    std::ofstream f(path);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    write(f);
    if (!f) throw Error("failed writing '" + path.string() + "'");
    out_ << "wrote " << path.string() << '\n';
  }

  int validate_verb() {
    const ValidationReport rep = validate(spec());
    out_ << rep.to_text();
    for (const auto& w : spec().warnings) out_ << "warning: " << w << '\n';
    if (rep.ok()) return kExitOk;
    std::string msg = "validation failed:";
    for (const auto& v : rep.violations) msg += " [" + v.section + "] " + v.message + ";";
    msg.pop_back();
    throw InvalidProblem(msg);
  }

  int check() {
    const TimeGrid g = grid();
    ConditionReport rep = check_L(spec());
    rep.merge(compute_mainthm_norms(spec(), g));
    const Schedule Qcal =
        cfg_.Qcal ? Schedule::constant(*cfg_.Qcal)
                  : derived_schedule(spec(), [](const CoefficientsAt& c) -> Matrix {
                      const Matrix W = c.Q + c.Scal;
                      return 0.5 * (W + W.transpose());
                    });
    try {
      rep.merge(check_shifted(spec(), Qcal, g));
    } catch (const NotPositiveDefinite& e) {
      ConditionEntry entry;
      entry.name = "shifted";
      entry.note = e.what();
      rep.entries.push_back(entry);
    }
    rep.merge(check_riccati_solvable(spec(), spec().T, steps()));
    out_ << rep.to_text();
    write_file("conditions.csv", [&](std::ostream& f) { rep.write_csv(f); });
    return kExitOk;
  }

  int solve() {
    const TimeGrid g = grid();
    const FBSolution shot = solve_newric_shooting(spec(), g);
    write_file("solution.csv", [&](std::ostream& f) { write_csv(f, shot); });
    out_ << "shooting: condition=" << fmt(shot.condition)
         << " boundary_residual=" << fmt(shot.boundary_residual)
         << " ode_residual=" << fmt(shot.ode_residual) << '\n';
    const double tol = cmd_.tol.value_or(1e-6);
    try {
      const FBSolution fp = fixed_point_iterate(spec(), g, std::min(tol, 1e-10));
      double diff = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        diff = std::max(diff, (fp.xi[k] - shot.xi[k]).cwiseAbs().maxCoeff());
      }
      out_ << "shooting/fixed-point " << (diff <= tol ? "agree" : "DISAGREE")
           << ": sup|xi difference|=" << fmt(diff) << " tol=" << fmt(tol)
           << " iterations=" << fp.iterations << '\n';
    } catch (const NoConvergence& e) {
      out_ << "shooting/fixed-point: fixed point did not converge after "
           << e.iterations() << " iterations (ratio " << fmt(e.contraction_ratio())
           << "); shooting result stands\n";
    }
    return kExitOk;
  }

  int riccati() {
    const TimeGrid g = grid();
    const RiccatiPath direct = solve_nonsymmetric_direct(spec(), g);
    write_file("riccati_direct.csv", [&](std::ostream& f) { write_csv(f, direct); });
    out_ << "direct: " << (direct.blow_up ? "blew up at t=" + fmt(g[*direct.blow_up])
                                          : std::string("finite on [0, T]"))
         << '\n';
    if (spec().n == 1 && spec().m == 1 && spec().has_constant_coefficients()) {
      const CoefficientsAt c = coefficients_at(spec(), 0.0);
      try {
        const RiccatiPath cf = solve_1d_closed_form(
            c.A(0, 0), c.Abar(0, 0), c.B(0, 0), c.R(0, 0), c.Q(0, 0) + c.Scal(0, 0),
            spec().QT(0, 0) + spec().effective_S_terminal()(0, 0), spec().T, g);
        write_file("riccati_closed_form.csv", [&](std::ostream& f) { write_csv(f, cf); });
        double diff = 0.0;
        if (!cf.blow_up && !direct.blow_up) {
          for (std::size_t k = 0; k < g.size(); ++k) {
            diff = std::max(diff, std::abs(cf.gamma[k](0, 0) - direct.gamma[k](0, 0)));
          }
          out_ << "closed form: sup|difference from direct|=" << fmt(diff) << '\n';
        } else {
          out_ << "closed form: "
               << (cf.blow_up ? "blew up at t=" + fmt(g[*cf.blow_up]) : std::string("finite"))
               << '\n';
        }
      } catch (const DistinctRootsViolated& e) {
        out_ << "closed form: not applicable (" << e.what() << ")\n";
      }
    }
    const RiccatiPath radon = solve_nonsymmetric_radon(spec(), g);
    write_file("riccati_radon.csv", [&](std::ostream& f) { write_csv(f, radon); });
    out_ << "radon: finite on [0, T]\n";
    return kExitOk;
  }

  int scan() {
    const double tmax = cmd_.tmax.value_or(spec().T);
    const ScanReport rep = existence_scan(spec(), tmax, steps());
    write_file("scan.csv", [&](std::ostream& f) { write_csv(f, rep); });
    const int n = spec().n;
    for (const auto& bracket : rep.sign_change_brackets) {
      const double T0 = refine_singular_horizon(spec(), bracket);
      const double det21 = transition_matrix(spec(), T0).block(n, 0, n, n).determinant();
      out_ << "sign change in [" << fmt(bracket.first) << ", " << fmt(bracket.second)
           << "]: T0=" << fmt(T0) << " det_phi21(T0)=" << fmt(det21) << '\n';
    }
    if (rep.sign_change_brackets.empty()) out_ << "no sign change of det_phi22\n";
    return kExitOk;
  }

  int mftype() {
    const MFTypeSolution sol = solve_mftype_mean(spec(), grid());
    write_file("mftype.csv", [&](std::ostream& f) { write_csv(f, sol); });
    out_ << "boundary_residual=" << fmt(sol.boundary_residual) << '\n';
    return kExitOk;
  }

  int compare() {
    const ProblemSpec& s = spec();
    if (s.n != 1 || s.m != 1 || !s.has_constant_coefficients()) {
      throw InvalidProblem("compare needs a scalar problem with constant coefficients");
    }
    const CoefficientsAt c = coefficients_at(s, 0.0);
    if (c.Qbar(0, 0) != 0.0 || s.QbarT(0, 0) != 0.0) {
      throw InvalidProblem("compare needs Qbar = 0 and QbarT = 0");
    }
    ComparisonParams p;
    p.a = c.A(0, 0);
    p.abar = c.Abar(0, 0);
    p.b = c.B(0, 0);
    p.r = c.R(0, 0);
    p.q = c.Q(0, 0);
    p.qT = s.QT(0, 0);
    p.T = s.T;
    p.x0 = s.x0_mean(0);
    p.steps = steps();
    out_ << compare_mfg_mftype(p).to_text() << '\n';
    return kExitOk;
  }

  int simulate() {
    SimConfig sim = cfg_.simulation.value_or(SimConfig{});
    if (cmd_.N) sim.N_values = *cmd_.N;
    if (cmd_.paths) sim.paths = *cmd_.paths;
    if (cmd_.seed) sim.seed = *cmd_.seed;
    if (cmd_.dt) sim.dt = *cmd_.dt;
    if (sim.N_values.empty()) throw InvalidProblem("simulate: no N values");
    const std::size_t K = sim.steps(spec().T);
    const std::size_t law_steps = (steps() + K - 1) / K * K;
    const FeedbackLaw law = equilibrium_law(spec(), law_steps);

    const RateReport rates = mckean_gap(spec(), law, sim);
    write_file("rates.csv", [&](std::ostream& f) { write_csv(f, rates); });
    out_ << "mckean gap slope=" << fmt(rates.gap_slope.slope) << " (se "
         << fmt(rates.gap_slope.std_error) << ")\n"
         << "cost gap slope=" << fmt(rates.cost_slope.slope) << " (se "
         << fmt(rates.cost_slope.std_error) << ")\n";

    const int N = *std::max_element(sim.N_values.begin(), sim.N_values.end());
    const ProbeReport probe = epsilon_nash_probe(spec(), law, sim, N);
    write_file("probe.csv", [&](std::ostream& f) { write_csv(f, probe); });
    out_ << "epsilon-Nash probe N=" << N << ": min gap=" << fmt(probe.min_gap)
         << " epsilon=" << fmt(probe.epsilon) << " -> "
         << (probe.epsilon_nash() ? "holds" : "FAILS") << '\n';
    return kExitOk;
  }

  int appendix() {
    if (!cfg_.appendix) throw InvalidProblem("appendix: config has no [appendix] section");
    const AppendixParams& p = *cfg_.appendix;
    const TimeGrid g(p.T, steps());
    const HcmCondition hcm = appendix_hcm_condition(p, g);
    const BsyyResult bsyy = appendix_bsyy(p, g);
    const HcmRiccati pi = appendix_hcm_riccati(p, g);
    write_file("appendix.csv", [&](std::ostream& f) {
      CsvRow(f) << "t" << "Pi" << "P" << "rho" << "zbar";
      for (std::size_t k = 0; k < g.size(); ++k) {
        CsvRow(f) << g[k] << pi.Pi[k] << bsyy.P[k] << bsyy.rho[k] << bsyy.zbar[k];
      }
    });
    out_ << "hcm: lhs=" << fmt(hcm.lhs) << " threshold=1 verdict="
         << (hcm.satisfied ? "satisfied" : "violated") << '\n';
    if (hcm.closed_form_applicable) {
      out_ << "hcm simplified: |gamma|(1-exp(-bT))=" << fmt(hcm.simplified)
           << " verdict=" << (hcm.simplified_satisfied ? "satisfied" : "violated")
           << " (sup form " << fmt(hcm.closed_form_sup) << ")\n";
    }
    out_ << "bsyy: gamma=" << fmt(p.gamma) << " gamma<=1 verdict="
         << (bsyy.gamma_condition ? "satisfied" : "violated");
    if (bsyy.closed_form_error) {
      out_ << " closed_form_error=" << fmt(*bsyy.closed_form_error);
    }
    out_ << " mean_residual=" << fmt(bsyy.mean_residual) << '\n';
    return kExitOk;
  }

  const Command& cmd_;
  std::ostream& out_;
  Config cfg_;
};

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int run(const Command& cmd, std::ostream& out, std::ostream& err) {
  auto fail = [&](int code, const std::string& what) {
    err << "ERROR: " << one_line(what) << '\n';
    return code;
  };
  try {
    Runner runner(cmd, out);
    return runner.dispatch();
  } catch (const ConfigError& e) {
    return fail(kExitInvalid, std::string("config: ") + e.what());
  } catch (const InvalidProblem& e) {
    return fail(kExitInvalid, e.what());
  } catch (const DimensionMismatch& e) {
    return fail(kExitInvalid, e.what());
  } catch (const NotPositiveDefinite& e) {
    return fail(kExitInvalid, e.what());
  } catch (const SingularShootingMatrix& e) {
    return fail(kExitNonExistence, std::string("no equilibrium: ") + e.what());
  } catch (const BoundaryOperatorSingular& e) {
    return fail(kExitNonExistence, std::string("no Riccati solution: ") + e.what());
  } catch (const std::exception& e) {
    return fail(kExitInternal, e.what());
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Linear-quadratic mean field game solver"};
  Command cmd;
  app.add_option("verb", cmd.verb, "Command to run")
      ->required()
      ->check(CLI::IsMember(kVerbs));
  app.add_option("--config", cmd.config_path, "Problem config file")->required();
  app.add_option("--out", cmd.output_dir, "Output directory");
  app.add_option("--steps", cmd.steps, "Grid steps");
  app.add_option("--tol", cmd.tol, "Tolerance");
  app.add_option("--seed", cmd.seed, "Simulation seed");
  app.add_option("--tmax", cmd.tmax, "Horizon of the existence scan");
  app.add_option("--N", cmd.N, "Player counts, e.g. 10,50,250")->delimiter(',');
  app.add_option("--paths", cmd.paths, "Monte Carlo replications");
  app.add_option("--dt", cmd.dt, "Euler step");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ERROR: " << one_line(e.what()) << '\n';
    return kExitInvalid;
  }
  return run(cmd, std::cout, std::cerr);
}

}  // namespace lqmfg
