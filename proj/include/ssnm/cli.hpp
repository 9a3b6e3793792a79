#ifndef SSNM_CLI_HPP
#define SSNM_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace ssnm::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kDivergence = 3,
  kVerificationFailure = 4,
};

// Subcommands: run, compare, verify, gen-data. `args` excludes the program
// name. Diagnostics go to `err`, machine-readable output to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main_entry(int argc, char** argv);

}  // namespace ssnm::cli

#endif
