#pragma once

#include <iostream>

namespace opennav::cli {

/// Entry point of the `opennav` executable. Exit codes: 0 success, 1 runtime error, 2 usage error.
int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace opennav::cli
