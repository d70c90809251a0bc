// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ihrm::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 2,
  kIoError = 3,
  kNumericalFault = 4,
};

// Runs one command. `args` excludes the program name. Machine-readable
// output bound for stdout goes to `out`, diagnostics and progress to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ihrm::cli
