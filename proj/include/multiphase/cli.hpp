#ifndef MULTIPHASE_CLI_HPP
#define MULTIPHASE_CLI_HPP

#include <string>

namespace multiphase {

/// Exit codes of the command-line runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `multiphase` executable.
int run_cli(int argc, const char* const* argv);

/// "%.17g", with "inf", "-inf" and "nan" spelled out.
std::string format_double(double v);

} // namespace multiphase

#endif
