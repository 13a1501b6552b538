#pragma once

// Command-line front end. Subcommands: simulate, fit, predict, blocks.

#include <iosfwd>
#include <string>
#include <vector>

namespace exsurv::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

/// Environment variable naming the directory for outputs given as relative
/// paths, and for default output files when --out is absent.
inline constexpr const char* kOutDirEnv = "EXSURV_OUT_DIR";

/// `args[0]` is the program name. Returns one of ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Values a, a + step, ... up to b from text `a:b:step`. Throws ParameterError.
std::vector<double> parse_grid(const std::string& text);

}  // namespace exsurv::cli
