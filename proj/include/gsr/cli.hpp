#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gsr::cli {

enum ExitCode : int {
  ok = 0,
  bad_arguments = 2,
  io_failure = 3,
  numerical_failure = 4,
  gradcheck_failure = 5,
};

/// Runs the command-line tool. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace gsr::cli
