#pragma once

#include <ostream>

namespace jde {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Entry point of the `jde` tool: predict | simulate | compare | table1.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace jde
