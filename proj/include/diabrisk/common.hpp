#pragma once

#include <stdexcept>
#include <string>

namespace diabrisk {

// Bad inputs or configuration the caller can fix. The CLI maps these to
// exit code 2; any other std::exception becomes exit code 1.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace diabrisk
