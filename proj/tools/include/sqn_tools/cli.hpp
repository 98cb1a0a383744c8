#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sqn::tools {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Entry point of the `sqn` tool. `args` excludes the program name. Output
/// goes to `out` unless --output names a file.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace sqn::tools
