#pragma once

#include <iosfwd>

#include "rutfinder/error.hpp"

namespace rutfinder::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kIo = 3,
  kDegenerate = 4,
};

int exit_code(ErrorKind kind) noexcept;

/// Entry point of the rutfinder tool. argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rutfinder::cli
