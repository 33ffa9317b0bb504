#pragma once

#include <stdexcept>
#include <string>

namespace canopy {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file (bad header, unparseable field, ...).
class ParseError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read, or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// A value violates a documented invariant of its type.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

/// A world coordinate or pixel index falls outside the grid.
class OutOfBounds : public Error {
public:
    using Error::Error;
};

/// Two rasters or vectors that must have equal shape do not.
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

/// Rasters with differing transforms fed into a per-pixel operation.
class GridMismatch : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class BandMismatch : public Error {
public:
    using Error::Error;
};

class DuplicateId : public Error {
public:
    using Error::Error;
};

/// Input too small or otherwise unusable for the requested operation.
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// Iterative solver failed to reach its tolerance.
class NonConvergence : public Error {
public:
    using Error::Error;
};

class InvalidFraction : public Error {
public:
    using Error::Error;
};

/// Bad or missing configuration key / value.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace canopy
