#pragma once

#include <stdexcept>
#include <string>

namespace chrelax {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Two fields (or a field and an operator) live on different grids.
class GridMismatch : public Error {
public:
    explicit GridMismatch(const std::string& what) : Error(what) {}
};

/// An argument left the admissible domain of a singular potential,
/// or a damped Newton step could not be kept interior.
class DomainViolation : public Error {
public:
    explicit DomainViolation(const std::string& what) : Error(what) {}
};

/// Newton failed to reduce the residual within the iteration budget.
class NewtonDivergence : public Error {
public:
    explicit NewtonDivergence(const std::string& what) : Error(what) {}
};

/// A direct or iterative linear solve failed (singular matrix, stalled CG).
class LinearSolveFailure : public Error {
public:
    explicit LinearSolveFailure(const std::string& what) : Error(what) {}
};

/// Backtracking found no decrease above the minimal step size.
class LineSearchFailure : public Error {
public:
    explicit LineSearchFailure(const std::string& what) : Error(what) {}
};

/// A sweep or study was asked to run on an inadmissible configuration.
class RejectedConfiguration : public Error {
public:
    explicit RejectedConfiguration(const std::string& what) : Error(what) {}
};

/// Configuration file errors carry the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what) : Error(what), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

    static ConfigError missing_key(const std::string& key) {
        return ConfigError(key, "missing key '" + key + "'");
    }
    static ConfigError bad_value(const std::string& key, const std::string& reason) {
        return ConfigError(key, "bad value for '" + key + "': " + reason);
    }
    static ConfigError unknown_key(const std::string& key) {
        return ConfigError(key, "unknown key '" + key + "'");
    }

private:
    std::string key_;
};

} // namespace chrelax
