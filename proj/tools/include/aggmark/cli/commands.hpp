#pragma once

#include <ostream>
#include <string>

#include "aggmark/cli/config.hpp"

namespace aggmark::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kNumericalFailure = 3,
  kVerifyFailure = 4
};

struct Valuation {
  CashFlowTable table;
  std::string method;  // "fast_path" or "duration_aware"
  double factor = 1.0; // rho applied after a realised exercise
};

/// Cash flows for every conditioning row of the config.
Valuation value(const RunConfig& config);

/// Writes cashflows.csv, reserves.csv and report.json.
int run_command(const RunConfig& config, std::ostream& out);

/// Analytic versus Monte Carlo comparison; writes verify.csv and report.json.
int verify_command(const RunConfig& config, std::ostream& out);

/// Parses argv and dispatches; returns the process exit code.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aggmark::cli
