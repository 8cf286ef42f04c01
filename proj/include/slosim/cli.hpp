#pragma once

#include <ostream>

namespace slosim {

// Exit codes: 0 success, 1 usage or config error, 2 runtime error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace slosim
