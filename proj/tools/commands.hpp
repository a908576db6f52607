#pragma once

namespace pti::cli {

enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kUsageError = 2,
  kFormatError = 3,
  kIoError = 4,
};

int run(int argc, char** argv);

}  // namespace pti::cli
