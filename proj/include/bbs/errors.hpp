#pragma once

#include <stdexcept>
#include <string>

namespace bbs {

/// Mismatched shapes: channel counts, grid sizes, point dimensionality.
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Unreadable, truncated or malformed files.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid parameter combinations (bad stride, cache on window-dependent features, ...).
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace bbs
