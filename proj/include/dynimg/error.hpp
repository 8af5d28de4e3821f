#pragma once

#include <stdexcept>
#include <string>

namespace dynimg {

// Raised for malformed inputs: bad files, shape mismatches, violated
// preconditions. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dynimg
