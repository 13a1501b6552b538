#pragma once

#include <string>
#include <string_view>

namespace exsurv {

/// Shortest decimal text that parses back to exactly `x`.
std::string format_exact(double x);

/// Six significant digits, the convention for human-facing numeric output.
std::string format_sig6(double x);

/// Parses a whole decimal field; accepts `inf`. Throws DataError.
double parse_double(std::string_view text);

std::string_view trim(std::string_view s);

}  // namespace exsurv
