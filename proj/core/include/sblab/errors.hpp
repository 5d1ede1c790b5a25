#pragma once

#include <stdexcept>
#include <string>

namespace sblab {

// Thrown for bad user input: config files, CLI arguments, dimension
// mismatches at API boundaries. CLI maps this to exit code 2.
class InvalidArgument : public std::runtime_error {
public:
    explicit InvalidArgument(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when training or sampling produces non-finite values that the
// caller did not opt to tolerate. CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown for file-system and serialization failures. CLI maps this to
// exit code 4.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sblab
