#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace msfm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument or configuration value was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A run configuration is unusable; key() names the offending entry.
class ConfigError : public InvalidArgument {
public:
    ConfigError(const std::string& key, const std::string& what)
        : InvalidArgument("config key '" + key + "': " + what), key_(key) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// A recursion (simulation, filter) produced a non-finite state.
class InstabilityError : public Error {
public:
    InstabilityError(const std::string& what, std::size_t step)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Adaptive quadrature failed to settle before the node cap.
class QuadratureError : public Error {
public:
    using Error::Error;
};

}  // namespace msfm
