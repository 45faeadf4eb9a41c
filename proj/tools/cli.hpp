#pragma once
#include <iosfwd>

namespace dyadiclab {

// exit status: 0 all checks pass, 1 a check failed, 2 usage or config error
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dyadiclab
