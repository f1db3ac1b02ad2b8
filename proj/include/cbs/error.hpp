#pragma once

#include <stdexcept>
#include <string>

namespace cbs {

// Exit codes shared by all CLI subcommands.
enum ExitCode : int {
  kExitOk = 0,
  kExitBadInput = 2,    // unreadable/invalid inputs, config violations
  kExitInfeasible = 3,  // optimization finished without satisfying hard constraints
  kExitNumeric = 4,     // internal numerical failure (NaN, degenerate geometry)
};

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_input(bool ok, const std::string& msg) {
  if (!ok) throw InputError(msg);
}

inline void require_numeric(bool ok, const std::string& msg) {
  if (!ok) throw NumericError(msg);
}

}  // namespace cbs
