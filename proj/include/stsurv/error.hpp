#pragma once

#include <stdexcept>

namespace stsurv {

/// Raised for bad user input: malformed files, inconsistent configuration,
/// arguments outside an operation's domain. The CLI maps it to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace stsurv
