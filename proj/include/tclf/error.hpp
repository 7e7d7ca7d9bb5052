#pragma once

#include <stdexcept>
#include <string>

namespace tclf {

// Failure classes map one-to-one onto CLI exit codes.
enum class ErrorKind { Usage, DataFormat, NotFound, Numeric, Shape };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& what) : Error(ErrorKind::DataFormat, what) {}
};

struct NotFoundError : Error {
  explicit NotFoundError(const std::string& what) : Error(ErrorKind::NotFound, what) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& what) : Error(ErrorKind::Shape, what) {}
};

/// Stable machine-readable name, e.g. "format_error".
const char* error_class_name(ErrorKind kind) noexcept;

/// Process exit status: 2 usage, 3 data format / not found, 4 numeric / shape.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace tclf
