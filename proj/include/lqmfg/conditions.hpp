#pragma once

#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lqmfg/coeffs.hpp"

namespace lqmfg {

enum class Verdict { kSatisfied, kViolated, kUndefined };

const char* to_string(Verdict v);

struct ConditionEntry {
  std::string name;
  double lhs = std::numeric_limits<double>::quiet_NaN();
  double threshold = std::numeric_limits<double>::quiet_NaN();
  Verdict verdict = Verdict::kUndefined;
  /// Reason for an undefined verdict, or other context.
  std::string note;
  /// |lhs − threshold| ≤ 1e-9.
  bool borderline = false;
};

/// Sufficient-condition quantities and verdicts.
struct ConditionReport {
  double L = std::numeric_limits<double>::quiet_NaN();
  double phi_norm = std::numeric_limits<double>::quiet_NaN();
  double abar_norm = std::numeric_limits<double>::quiet_NaN();
  double s_norm = std::numeric_limits<double>::quiet_NaN();
  double mainthm_lhs = std::numeric_limits<double>::quiet_NaN();
  std::vector<ConditionEntry> entries;

  const ConditionEntry* find(const std::string& name) const;
  /// Adds the entries of `other` (and any norms this report lacks).
  void merge(const ConditionReport& other);
  /// One condition per line: name, values, verdict.
  std::string to_text() const;
  /// `condition,lhs,threshold,verdict`.
  void write_csv(std::ostream& out) const;
};

/// Builds an entry for "lhs < threshold" with the borderline flag.
ConditionEntry strict_less(std::string name, double lhs, double threshold);

/// The small-horizon constant
/// T(‖Q_T+𝒮_T‖² + ‖Q+𝒮‖_T)‖BR⁻¹B*‖_T exp((2‖A+Ā‖_T + 2‖A*‖_T
/// + ‖BR⁻¹B*‖_T + ‖Q+𝒮‖_T)T), with ‖·‖_T the supremum of the spectral norm.
double compute_L(const ProblemSpec& spec);

/// Report holding L and its verdict (entry "L").
ConditionReport check_L(const ProblemSpec& spec);

/// The contraction norms ⦀φ⦀_T, ⦀Ā⦀_T, ⦀𝒮⦀_T and the verdict of
/// √T⦀φ⦀⦀Ā⦀(1+⦀𝒮⦀) + ⦀𝒮⦀ < 1 (entry "mainthm"). Undefined when Q_t is not
/// positive definite where it must be inverted.
ConditionReport compute_mainthm_norms(const ProblemSpec& spec, const TimeGrid& grid);

/// The same condition with the weight Q replaced by `Qcal` and 𝒮 by
/// Q + 𝒮 − 𝒬 (entry "shifted"). `QcalT` defaults to Q_T. Throws
/// NotPositiveDefinite when 𝒬 is not positive definite on the grid.
ConditionReport check_shifted(const ProblemSpec& spec, const Schedule& Qcal,
                              const TimeGrid& grid,
                              const std::optional<Matrix>& QcalT = std::nullopt);

/// Solvability of the nonsymmetric Riccati equation on [0, T] from the norms
/// over [0, T0] (entry "riccati_solvable"). Requires T ≤ T0.
ConditionReport check_riccati_solvable(const ProblemSpec& spec, double T0,
                                       std::size_t steps = kDefaultSteps);

/// `spec` restricted or extended (last piece continued) to horizon `T`.
ProblemSpec with_horizon(ProblemSpec spec, double T);

}  // namespace lqmfg
