#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace promptfx::cli {

/// Exit codes. Stable; scripts may rely on them.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,         // anything not covered below (backend unavailable, internal error)
  kInvalidFlags = 2,    // unknown/missing/conflicting flags or bad flag values
  kIoFailure = 3,       // unreadable input, unwritable output, malformed WAV
  kDegeneratePrompt = 4,
  kSchemaViolation = 5  // params.json does not match the chain schema
};

struct Streams {
  std::ostream& out;
  std::ostream& err;
  /// When false (stdout is a pipe or file), `run` also writes params.json to out.
  bool out_is_terminal = true;
};

int run_cli(const std::vector<std::string>& args, Streams streams);

}  // namespace promptfx::cli
