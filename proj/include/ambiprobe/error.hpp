#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ambiprobe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input row. `row` is 1-based with the header counted as row 1.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class DuplicateError : public Error {
 public:
  DuplicateError(std::size_t row, const std::string& key)
      : Error("row " + std::to_string(row) + ": duplicate id '" + key + "'"),
        row_(row), key_(key) {}
  std::size_t row() const noexcept { return row_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::size_t row_;
  std::string key_;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Correlation requested on constant or too-short input.
class UndefinedCorrelation : public Error {
 public:
  using Error::Error;
};

/// Design matrix is rank deficient; `column` is the first dependent column.
class SingularError : public Error {
 public:
  explicit SingularError(std::size_t column)
      : Error("design matrix is rank deficient at column " +
              std::to_string(column)),
        column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

class NestingError : public Error {
 public:
  using Error::Error;
};

class SampleSizeError : public Error {
 public:
  using Error::Error;
};

class DataIntegrityError : public Error {
 public:
  using Error::Error;
};

class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

/// Some pairs lack one or both sides in an embedding dump.
class CompletenessError : public Error {
 public:
  explicit CompletenessError(std::vector<std::string> pair_ids);
  const std::vector<std::string>& pair_ids() const noexcept { return pair_ids_; }

 private:
  std::vector<std::string> pair_ids_;
};

class UndefinedExpectationError : public Error {
 public:
  using Error::Error;
};

}  // namespace ambiprobe
