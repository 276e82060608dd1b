#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace greenzonal {

// Base for every error raised by the library. The CLI maps these to exit
// code 2 (data error); malformed command lines are reported separately.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Text input (ASCII grid, GeoJSON, CSV, manifest) that cannot be parsed.
// Carries the 1-based line number when one is known, else 0.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Binary container outside the supported GeoTIFF profile, or damaged.
class FormatError : public Error {
public:
    using Error::Error;
};

// Grids that must share shape/transform but do not.
class MismatchError : public Error {
public:
    using Error::Error;
};

// Zone, raster or window that does not intersect the data it is applied to.
class CoverageError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace greenzonal
