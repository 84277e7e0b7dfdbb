#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rspca {

// Every failure raised by the library derives from Error so callers can
// catch one type at the boundary (the CLI maps these to exit codes).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  [[nodiscard]] virtual const char* kind() const noexcept { return "error"; }
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::size_t line = 0, std::string key = {})
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line),
        key_(std::move(key)) {}
  [[nodiscard]] const char* kind() const noexcept override { return "config"; }
  [[nodiscard]] std::size_t line() const noexcept { return line_; }
  [[nodiscard]] const std::string& key() const noexcept { return key_; }

 private:
  std::size_t line_;
  std::string key_;
};

class RangeError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "range"; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "domain"; }
};

class ShapeError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "shape"; }
};

class SingularityError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "singularity"; }
};

class IterationLimitError : public Error {
 public:
  IterationLimitError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  [[nodiscard]] const char* kind() const noexcept override { return "iteration_limit"; }
  [[nodiscard]] double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

class ReconstructionError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "reconstruction"; }
};

class SchemaError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "schema"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "io"; }
};

class InterruptedError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "interrupted"; }
};

}  // namespace rspca
