#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace flowmon {

// Communication costs are integer byte*hop units throughout.
using Cost = std::int64_t;

/// Raised on invalid input: malformed files, bad parameters, broken preconditions.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace flowmon
