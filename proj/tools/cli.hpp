#pragma once

#include <iosfwd>

namespace morphnmpc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitCrash = 2;

/// Entry point of the morphnmpc tool; returns the process exit code.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace morphnmpc::cli
