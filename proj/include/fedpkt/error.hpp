#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedpkt {

// Base for all library errors. `kind()` is a stable short name used by the
// CLI diagnostics and by tests.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Bad configuration or contract violation by the caller (CLI exit 1).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad input data (CLI exit 2).
class DataError : public Error {
 public:
  using Error::Error;
};

class MalformedRecord : public DataError {
 public:
  MalformedRecord(std::size_t line_no, const std::string& reason)
      : DataError("MalformedRecord",
                  "line " + std::to_string(line_no) + ": " + reason),
        line_no_(line_no) {}
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class IoFailure : public DataError {
 public:
  explicit IoFailure(const std::string& what) : DataError("IoFailure", what) {}
};

inline ValidationError config_invalid(const std::string& field,
                                      const std::string& why) {
  return ValidationError("ConfigInvalid", field + ": " + why);
}

}  // namespace fedpkt
