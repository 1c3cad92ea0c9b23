#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace lqmfg {

struct Command {
  std::string verb;
  std::string config_path;
  std::string output_dir = ".";
  std::optional<std::size_t> steps;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::optional<double> tmax;
  std::optional<std::vector<int>> N;
  std::optional<int> paths;
  std::optional<double> dt;
};

inline const std::vector<std::string> kVerbs{"validate", "check",  "solve",
                                             "riccati",  "scan",   "mftype",
                                             "compare",  "simulate", "appendix"};

enum ExitCode : int { kExitOk = 0, kExitInvalid = 1, kExitNonExistence = 2, kExitInternal = 3 };

/// Executes one command. Reports go to `out`; on failure a single
/// `ERROR: ...` line goes to `err`. Returns the exit status.
int run(const Command& cmd, std::ostream& out, std::ostream& err);

/// Parses argv (CLI11) and runs the command.
int run_cli(int argc, char** argv);

}  // namespace lqmfg
