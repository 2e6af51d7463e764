// Command-line entry point: train, extract, eval, gradcheck.

#ifndef SPANIE_CLI_H_
#define SPANIE_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace spanie {

inline constexpr const char *kVersion = "0.1.0";

// Parses `args` (without the program name) and runs the command. Returns the
// process exit code; diagnostics go to `err`.
int RunCli(const std::vector<std::string> &args, std::ostream &out,
           std::ostream &err);

}  // namespace spanie

#endif  // SPANIE_CLI_H_
