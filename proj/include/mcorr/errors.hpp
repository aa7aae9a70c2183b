#pragma once

#include <stdexcept>
#include <string>

namespace mcorr {

/// Base for all domain errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A column has zero sample variance, so a correlation or slope is undefined.
class DegenerateVariance : public Error {
public:
    DegenerateVariance(std::string column, const std::string& what)
        : Error(what), column_(std::move(column)) {}
    explicit DegenerateVariance(std::string column)
        : DegenerateVariance(column, "degenerate variance in column '" + column + "'") {}

    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class InvalidNoise : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NotOrthonormal : public Error {
public:
    using Error::Error;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

class ModeUnsupported : public Error {
public:
    using Error::Error;
};

class AllSamplesFlagged : public Error {
public:
    using Error::Error;
};

class RankDeficientA : public Error {
public:
    using Error::Error;
};

class DimensionUnsupported : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries the 1-based row and column when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
        : Error(what), row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

} // namespace mcorr
