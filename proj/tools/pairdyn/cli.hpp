#pragma once

#include <iosfwd>

namespace pairdyn::cli {

// Exit codes: 0 success, 2 validation, 3 numerical failure, 4 I/O.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pairdyn::cli
