#pragma once

#include <stdexcept>
#include <string>

namespace ctreg {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI error JSON.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "config"; }
};

/// Malformed or inconsistent on-disk data. `field()` names the offending entry.
class FormatError : public Error {
public:
    FormatError(std::string field, const std::string& what)
        : Error("format error in '" + field + "': " + what), field_(std::move(field)) {}
    const char* kind() const noexcept override { return "format"; }
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class DimensionError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "dimension"; }
};

class CapacityError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "capacity"; }
};

class NumericError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "numeric"; }
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

inline void require_dims(bool ok, const std::string& msg) {
    if (!ok) throw DimensionError(msg);
}

}  // namespace detail
}  // namespace ctreg
