#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bitkernel {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error("config error [" + key + "]: " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Raised when a training loss becomes non-finite or exceeds the blow-up limit.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, double loss)
      : Error("training diverged at step " + std::to_string(step) +
              " (loss=" + std::to_string(loss) + ")"),
        step_(step),
        loss_(loss) {}
  std::size_t step() const noexcept { return step_; }
  double loss() const noexcept { return loss_; }

 private:
  std::size_t step_;
  double loss_;
};

// A closed-form bound evaluated outside the range where it is meaningful.
class InvalidRegimeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class PoleError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace bitkernel
