#pragma once

#include <stdexcept>
#include <string>

namespace domac {

/// Invalid configuration or mismatched shapes between collaborating objects.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A NaN/Inf appeared where finite values are required.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Checkpoint could not be read: bad magic, version, truncation or checksum.
class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace domac
