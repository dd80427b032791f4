#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rotograb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or unparsable hand configuration. `field()` names the offending key.
class GeometryError : public Error {
public:
    GeometryError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// An angle outside its joint limit interval (strict mode).
class LimitError : public Error {
public:
    using Error::Error;
};

/// A tendon length change that no in-range joint angle can produce.
class RangeError : public Error {
public:
    RangeError(const std::string& what, double lo, double hi)
        : Error(what), lo_(lo), hi_(hi) {}

    double achievable_low() const noexcept { return lo_; }
    double achievable_high() const noexcept { return hi_; }

private:
    double lo_;
    double hi_;
};

/// Malformed trajectory file or sample.
class TrajectoryError : public Error {
public:
    using Error::Error;
};

/// Playback stopped at a specific sample.
class PlaybackError : public Error {
public:
    PlaybackError(const std::string& what, std::size_t index)
        : Error(what), index_(index) {}

    std::size_t sample_index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// The servo bus refused a command or a session.
class BusError : public Error {
public:
    using Error::Error;
};

/// A landmark frame that cannot be turned into joint angles.
class FrameError : public Error {
public:
    using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace rotograb
