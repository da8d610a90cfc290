#pragma once

#include <stdexcept>
#include <string>

namespace pfvm {

/// Invalid arguments, configuration values or domain violations.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed on-disk input; `line` is 1-based, 0 when not line-specific.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Non-finite value produced during time integration.
class BlowupError : public std::runtime_error {
 public:
  BlowupError(const std::string& what, int cell, double time)
      : std::runtime_error(what + " (cell " + std::to_string(cell) + ", t=" + std::to_string(time) + ")"),
        cell_(cell),
        time_(time) {}
  int cell() const { return cell_; }
  double time() const { return time_; }

 private:
  int cell_;
  double time_;
};

}  // namespace pfvm
