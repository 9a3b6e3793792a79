#ifndef SSNM_ERRORS_HPP
#define SSNM_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ssnm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad flags, bad solver configuration, violated preconditions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  // 1-based line number in the offending file, 0 if not file related.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Non-finite objective or objective blow-up during a solver run.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : Error(what), iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace ssnm

#endif
