#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lossmpt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitComputation = 1;
inline constexpr int kExitUsage = 2;

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Results go to `out` unless --out names a file.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 12 significant digits, '.' decimal separator, "nan" for NaN.
std::string format_number(double value);

}  // namespace lossmpt::cli
