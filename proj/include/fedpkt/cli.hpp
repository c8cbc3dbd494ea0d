#pragma once

#include <ostream>

namespace fedpkt {

// Exit codes of the fedpkt tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitData = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fedpkt
