#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cadsynth {

// Exit codes of the cadsynth binary.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitDetector = 3;

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cadsynth
