#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace unirec {

/// Exit codes of run_cli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Subcommands: gen, recover, certify-raic, sweep, bounds, report-data.
/// Results go to out, diagnostics to err. RAIC_SEED is read from the
/// environment.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace unirec
