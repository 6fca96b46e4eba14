#pragma once

#include <ostream>

namespace spiquad {

/// Exit statuses of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,
  kExitUsage = 2,
  kExitParse = 3,
  kExitCertification = 4,
  kExitSolveFailed = 5,
  kExitMissingData = 6,
  kExitVersion = 7,
  kExitRateViolation = 8,
  kExitPrecisionFloor = 9,
};

/// Runs one command (generate, verify, convergence, efficiency). The catalog
/// root defaults to $SPIQUAD_CATALOG and the triangle/tetrahedron data
/// directory to $SPIQUAD_DATA.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spiquad
