#pragma once

#include <iosfwd>

#include "nutrisight/error.h"

namespace nutrisight::cli {

// 2 validation, 3 data, 4 training, 5 provider, 1 anything else.
int exit_code(ErrorKind kind);

// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nutrisight::cli
