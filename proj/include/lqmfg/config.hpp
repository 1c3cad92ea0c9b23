#pragma once

#include <istream>
#include <optional>
#include <string>

#include "lqmfg/appendix.hpp"
#include "lqmfg/coeffs.hpp"
#include "lqmfg/simulator.hpp"

namespace lqmfg {

/// A parsed problem file. Sections:
///   [problem]   n, m, T, delta, x0_mean
///   [A] [Abar] [B] [sigma] [Q] [Qbar] [R] [S]
///               `const = r11,r12;r21,r22` or repeated `at <t> = <matrix>`
///   [QT] [QbarT] [ST]   `const = <matrix>`
///   [Qcal]      optional weight for the shifted condition (`const = ...`)
///   [appendix]  a, b, r, alpha, gamma, eta, T
///   [simulation] N, paths, seed, dt, x0_cov, substeps
/// Missing coefficient sections default to zero; [problem] and [R] are
/// required.
struct Config {
  ProblemSpec spec;
  std::optional<Matrix> Qcal;
  std::optional<AppendixParams> appendix;
  std::optional<SimConfig> simulation;
};

/// Throws ConfigError carrying the offending line number.
Config parse_config(std::istream& in);
Config load_config(const std::string& path);

/// Parses `r11,r12;r21,r22`.
Matrix parse_matrix(const std::string& text);

}  // namespace lqmfg
