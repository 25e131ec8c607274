#pragma once

#include <ostream>

namespace stsurv {

/// Entry point of the stsurv command line. Returns 0 on success, 1 on usage
/// or validation errors and 2 on runtime failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace stsurv
