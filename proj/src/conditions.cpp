#include "lqmfg/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lqmfg/csv.hpp"
#include "lqmfg/errors.hpp"
#include "lqmfg/odecore.hpp"

namespace lqmfg {

namespace {

constexpr double kBorderline = 1e-9;

// Weight W, deviation matrix Σ and their terminal values.
struct NormInputs {
  std::vector<Matrix> W, Sigma;
  Matrix WT, SigmaT;
  std::string weight_name;
};

bool all_equal(const std::vector<Matrix>& v) {
  return std::all_of(v.begin(), v.end(), [&](const Matrix& m) { return m == v[0]; });
}

// sup_t sqrt(‖φ*(T,t) W_T^{1/2}‖² + ∫_t^T ‖φ*(s,t) W_s^{1/2}‖² ds), using
// ‖φ* W^{1/2}‖² = λmax(φ* W φ).
double phi_norm(const SampledCoefficients& c, const NormInputs& in) {
  const TimeGrid& grid = c.grid;
  const std::size_t K = grid.steps();
  const double h = grid.step();
  const auto F = fundamental_solution(c.A, 0, grid).samples;
  auto quad = [](const Matrix& phi, const Matrix& w) {
    return max_sym_eigenvalue(phi.transpose() * w * phi);
  };

  double best = 0.0;
  if (all_equal(c.A) && all_equal(in.W)) {
    // φ(s, t) = F_{k−j}: every quantity depends on k − j alone.
    std::vector<double> g(K + 1), cum(K + 1);
    for (std::size_t m = 0; m <= K; ++m) {
      g[m] = quad(F[m], in.W[0]);
      cum[m] = g[m] + (m > 0 ? cum[m - 1] : 0.0);
    }
    for (std::size_t j = 0; j <= K; ++j) {
      const std::size_t M = K - j;
      const double integral = M == 0 ? 0.0 : h * (cum[M] - 0.5 * (g[0] + g[M]));
      best = std::max(best, quad(F[M], in.WT) + integral);
    }
    return std::sqrt(best);
  }

  for (std::size_t j = 0; j <= K; ++j) {
    const Matrix Finv = F[j].inverse();
    double integral = 0.0;
    Matrix phi = Matrix::Identity(F[j].rows(), F[j].cols());
    for (std::size_t k = j; k < K; ++k) {
      const Matrix next = F[k + 1] * Finv;
      // Step weight at both ends keeps the rule exact per piece.
      integral += 0.5 * h * (quad(phi, in.W[k]) + quad(next, in.W[k]));
      phi = next;
    }
    best = std::max(best, quad(phi, in.WT) + integral);
  }
  return std::sqrt(best);
}

std::string at_time(double t) {
  std::ostringstream s;
  s << "t=" << t;
  return s.str();
}

ConditionReport compute_norms(const SampledCoefficients& c, const NormInputs& in,
                              const std::string& entry_name) {
  const TimeGrid& grid = c.grid;
  const std::size_t K = grid.steps();
  ConditionReport rep;
  rep.phi_norm = phi_norm(c, in);

  // Inverse square roots are only needed where Ā or Σ is nonzero.
  std::string undefined;
  const Matrix* cached_w = nullptr;
  Matrix cached_inv;
  auto inv_sqrt_at = [&](const Matrix& w, double t) -> const Matrix* {
    if (cached_w && *cached_w == w) return &cached_inv;
    try {
      cached_inv = inv_sqrt(w);
      cached_w = &w;
      return &cached_inv;
    } catch (const NotPositiveDefinite&) {
      if (undefined.empty()) {
        undefined = in.weight_name + " is not positive definite at " + at_time(t);
      }
      return nullptr;
    }
  };

  double abar = 0.0, s = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const bool need_a = !c.Abar[k].isZero(0.0);
    const bool need_s = !in.Sigma[k].isZero(0.0);
    if (!need_a && !need_s) continue;
    const Matrix* wi = inv_sqrt_at(in.W[k], grid[k]);
    if (!wi) continue;
    if (need_a) abar = std::max(abar, spectral_norm(c.Abar[k] * *wi));
    if (need_s) s = std::max(s, spectral_norm(*wi * in.Sigma[k] * *wi));
  }
  // The terminal deviation weight enters only when it is nonzero.
  if (!in.SigmaT.isZero(0.0)) {
    try {
      const Matrix wi = inv_sqrt(in.WT);
      s = std::max(s, spectral_norm(wi * in.SigmaT * wi));
    } catch (const NotPositiveDefinite&) {
      if (undefined.empty()) {
        undefined = in.weight_name + "_T is not positive definite while the "
                    "terminal deviation weight is nonzero";
      }
    }
  }

  if (!undefined.empty()) {
    ConditionEntry e;
    e.name = entry_name;
    e.threshold = 1.0;
    e.note = undefined;
    rep.entries.push_back(e);
    return rep;
  }
  rep.abar_norm = abar;
  rep.s_norm = s;
  rep.mainthm_lhs = std::sqrt(grid.end()) * rep.phi_norm * abar * (1.0 + s) + s;
  rep.entries.push_back(strict_less(entry_name, rep.mainthm_lhs, 1.0));
  return rep;
}

double sup_over_pieces(const ProblemSpec& spec,
                       const std::function<double(const CoefficientsAt&)>& f) {
  double best = f(coefficients_at(spec, 0.0));
  for (double b : spec.breakpoints()) best = std::max(best, f(coefficients_at(spec, b)));
  return best;
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kSatisfied: return "satisfied";
    case Verdict::kViolated: return "violated";
    case Verdict::kUndefined: return "undefined";
  }
  return "undefined";
}

const ConditionEntry* ConditionReport::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

void ConditionReport::merge(const ConditionReport& other) {
  auto take = [](double& mine, double theirs) {
    if (std::isnan(mine)) mine = theirs;
  };
  take(L, other.L);
  take(phi_norm, other.phi_norm);
  take(abar_norm, other.abar_norm);
  take(s_norm, other.s_norm);
  take(mainthm_lhs, other.mainthm_lhs);
  entries.insert(entries.end(), other.entries.begin(), other.entries.end());
}

std::string ConditionReport::to_text() const {
  std::ostringstream out;
  if (!std::isnan(phi_norm)) {
    out << "norms: phi=" << format_double(phi_norm)
        << " abar=" << format_double(abar_norm) << " s=" << format_double(s_norm)
        << "\n";
  }
  for (const auto& e : entries) {
    out << e.name << ": lhs=" << format_double(e.lhs)
        << " threshold=" << format_double(e.threshold) << " " << to_string(e.verdict);
    if (e.borderline) out << " (borderline)";
    if (!e.note.empty()) out << " [" << e.note << "]";
    out << "\n";
  }
  return out.str();
}

void ConditionReport::write_csv(std::ostream& out) const {
  out << "condition,lhs,threshold,verdict\n";
  for (const auto& e : entries) {
    CsvRow(out) << e.name << e.lhs << e.threshold << to_string(e.verdict);
  }
}

ConditionEntry strict_less(std::string name, double lhs, double threshold) {
  ConditionEntry e;
  e.name = std::move(name);
  e.lhs = lhs;
  e.threshold = threshold;
  if (std::isnan(lhs) || std::isnan(threshold)) {
    e.verdict = Verdict::kUndefined;
    return e;
  }
  e.verdict = lhs < threshold ? Verdict::kSatisfied : Verdict::kViolated;
  e.borderline = std::abs(lhs - threshold) <= kBorderline;
  return e;
}

double compute_L(const ProblemSpec& spec) {
  const Matrix ST = spec.effective_S_terminal();
  const double terminal = spectral_norm(spec.QT + ST);
  const double qs = sup_over_pieces(spec, [](const CoefficientsAt& c) {
    return spectral_norm(c.Q + c.Scal);
  });
  const double g = sup_over_pieces(spec, [](const CoefficientsAt& c) {
    return spectral_norm(c.G);
  });
  const double aa = sup_over_pieces(spec, [](const CoefficientsAt& c) {
    return spectral_norm(c.A + c.Abar);
  });
  const double a = sup_over_pieces(spec, [](const CoefficientsAt& c) {
    return spectral_norm(c.A.transpose());
  });
  const double T = spec.T;
  const double prefactor = T * (terminal * terminal + qs) * g;
  if (prefactor == 0.0) return 0.0;
  return prefactor * std::exp((2.0 * aa + 2.0 * a + g + qs) * T);
}

ConditionReport check_L(const ProblemSpec& spec) {
  ConditionReport rep;
  rep.L = compute_L(spec);
  rep.entries.push_back(strict_less("L", rep.L, 1.0));
  return rep;
}

ConditionReport compute_mainthm_norms(const ProblemSpec& spec, const TimeGrid& grid) {
  const SampledCoefficients c = sample_coefficients(spec, grid);
  NormInputs in{c.Q, c.Scal, spec.QT, c.ScalT, "Q"};
  return compute_norms(c, in, "mainthm");
}

ConditionReport check_shifted(const ProblemSpec& spec, const Schedule& Qcal,
                              const TimeGrid& grid, const std::optional<Matrix>& QcalT) {
  const SampledCoefficients c = sample_coefficients(spec, grid);
  const auto W = sample(Qcal, grid, spec.n, spec.n).samples;
  const Matrix WT = QcalT.value_or(spec.QT);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (k > 0 && W[k] == W[k - 1]) continue;
    inv_sqrt(W[k]);  // throws when 𝒬 is not positive definite
  }
  NormInputs in{W, {}, WT, spec.QT + c.ScalT - WT, "Qcal"};
  in.Sigma.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    in.Sigma.push_back(c.Q[k] + c.Scal[k] - W[k]);
  }
  return compute_norms(c, in, "shifted");
}

ProblemSpec with_horizon(ProblemSpec spec, double T) {
  if (!(T > 0.0)) throw InvalidProblem("horizon must be positive");
  for (Schedule* s : {&spec.A, &spec.Abar, &spec.B, &spec.sigma, &spec.Q,
                      &spec.Qbar, &spec.R, &spec.S}) {
    if (s->empty() || s->is_constant()) continue;
    std::vector<Schedule::Piece> kept;
    for (const auto& p : s->pieces()) {
      if (p.start < T) kept.push_back(p);
    }
    *s = kept.size() == 1 ? Schedule::constant(kept[0].value)
                          : Schedule::piecewise(std::move(kept));
  }
  spec.T = T;
  return spec;
}

ConditionReport check_riccati_solvable(const ProblemSpec& spec, double T0,
                                       std::size_t steps) {
  const ProblemSpec spec0 = with_horizon(spec, T0);
  ConditionReport rep = compute_mainthm_norms(spec0, make_grid(spec0, steps));
  const ConditionEntry* main = rep.find("mainthm");
  ConditionEntry e;
  e.name = "riccati_solvable";
  if (main->verdict == Verdict::kUndefined) {
    e.note = main->note;
  } else if (rep.abar_norm == 0.0) {
    e = strict_less("riccati_solvable", rep.s_norm, 1.0);
    e.note = "abar_norm = 0";
  } else if (!(rep.s_norm < 1.0)) {
    e.lhs = rep.s_norm;
    e.threshold = 1.0;
    e.verdict = Verdict::kViolated;
    e.note = "s_norm >= 1";
  } else {
    const double r = (1.0 - rep.s_norm) /
                     (rep.phi_norm * rep.abar_norm * (1.0 + rep.s_norm));
    e = strict_less("riccati_solvable", spec.T, r * r);
    if (spec.T > T0) {
      e.verdict = Verdict::kViolated;
      e.note = "T exceeds T0";
    } else {
      e.note = "horizon bound";
    }
  }
  rep.entries.clear();
  rep.entries.push_back(e);
  return rep;
}

}  // namespace lqmfg
