#pragma once

#include <string>
#include <vector>

namespace qca {

/// Exit codes of the command-line driver.
enum ExitCode : int { kExitOk = 0, kExitInvalid = 1, kExitRejected = 2 };

/// Runs the command-line driver; args excludes the program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace qca
