#pragma once

#include <iosfwd>

namespace sparsevox::cli {

// Parses argv and runs one subcommand. Exit codes: 0 success, 1 data/config error,
// 2 bad command line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sparsevox::cli
