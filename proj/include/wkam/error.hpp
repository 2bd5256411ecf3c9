#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "wkam/vec.hpp"

namespace wkam {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad call arguments (n_max < 1, b <= a, empty regions, ...).
class ArgumentError : public Error {
public:
  using Error::Error;
};

// Invalid configuration or spec parameters. `line` is 0 when unknown.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string &what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

// Level below the critical value. `cycle` is a closed chain of grid indices
// (first == last) whose cost is negative, when one is available.
class SubcriticalError : public Error {
public:
  SubcriticalError(const std::string &what, std::vector<int> cycle = {})
      : Error(what), cycle_(std::move(cycle)) {}
  const std::vector<int> &cycle() const { return cycle_; }

private:
  std::vector<int> cycle_;
};

class NumericError : public Error {
public:
  using Error::Error;
};

// The maximizer of a numeric Legendre transform sits on the edge of the
// momentum box.
class BoundaryError : public NumericError {
public:
  BoundaryError(const std::string &what, Vec2 point)
      : NumericError(what), point_(point) {}
  Vec2 point() const { return point_; }

private:
  Vec2 point_;
};

// An operation whose hypotheses are not met by its inputs.
class RefusalError : public Error {
public:
  using Error::Error;
};

} // namespace wkam
