#pragma once

#include <stdexcept>
#include <string>

namespace mla {

/// Thrown when matrix/vector dimensions do not conform.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// Thrown when a configuration violates a structural invariant.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown on unreadable/unwritable files or malformed file contents.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mla
