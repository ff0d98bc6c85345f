#pragma once

#include <stdexcept>
#include <string>

namespace burst {

// Bad input data (malformed CSV, out-of-range interval, empty trace).
class DataError : public std::runtime_error {
  public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// A documented invariant was violated by arguments or internal state
// (grid mismatch, nonpositive rate, buffer accounting failure).
class InvariantError : public std::logic_error {
  public:
    explicit InvariantError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace burst
