#include "tclf/error.hpp"

namespace tclf {

const char* error_class_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage: return "usage_error";
    case ErrorKind::DataFormat: return "format_error";
    case ErrorKind::NotFound: return "not_found";
    case ErrorKind::Numeric: return "numeric_error";
    case ErrorKind::Shape: return "shape_error";
  }
  return "error";
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage: return 2;
    case ErrorKind::DataFormat:
    case ErrorKind::NotFound: return 3;
    case ErrorKind::Numeric:
    case ErrorKind::Shape: return 4;
  }
  return 1;
}

}  // namespace tclf
