#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace airx {

/// Malformed or inconsistent configuration input.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Corrupted, truncated, or wrong-type serialized file.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
    FormatError(const std::string& what, std::uint64_t byte_offset)
        : std::runtime_error(what + " at byte offset " + std::to_string(byte_offset)) {}
};

/// Training diverged or produced non-finite values.
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace airx
