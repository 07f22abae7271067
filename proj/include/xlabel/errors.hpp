#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace xlabel {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Malformed record table. row is 1-based including the header line;
/// column is the header name when known.
class CsvError : public InvalidInput {
public:
    CsvError(const std::string& message, std::size_t row, std::string column)
        : InvalidInput("row " + std::to_string(row) + (column.empty() ? "" : ", column '" + column + "'") + ": " +
                       message),
          row_(row),
          column_(std::move(column)) {}

    std::size_t row() const { return row_; }
    const std::string& column() const { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

/// Training data holds a single class.
class DegenerateLabels : public Error {
public:
    using Error::Error;
};

class DeserializeError : public Error {
public:
    using Error::Error;
};

/// Sampling was requested but no unlabeled record remains.
class EmptyPool : public Error {
public:
    using Error::Error;
};

/// keep/flip submitted for a record whose pseudo-label was never presented.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// A chained task was evaluated before the tasks it depends on.
class ChainOrderError : public Error {
public:
    using Error::Error;
};

/// Unknown dataset or session id.
class NotFound : public Error {
public:
    using Error::Error;
};

} // namespace xlabel
