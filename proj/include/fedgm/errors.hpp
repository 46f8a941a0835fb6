#pragma once

#include <stdexcept>
#include <string>

namespace fedgm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes or parameter layouts.
struct DimensionError : Error {
  using Error::Error;
};

/// A NaN or Inf appeared. `epoch` is set when raised from a training loop.
struct NumericError : Error {
  explicit NumericError(const std::string& what, int epoch = -1)
      : Error(epoch >= 0 ? what + " (epoch " + std::to_string(epoch) + ")" : what), epoch(epoch) {}
  int epoch;
};

/// Malformed graph or config file; `line` is 1-based, 0 when unknown.
struct ParseError : Error {
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line(line) {}
  int line;
};

struct ConfigError : Error {
  using Error::Error;
};

/// A failure inside a named protocol phase (stage1, stage2, final, ...).
struct PhaseError : Error {
  PhaseError(const std::string& phase, const std::string& what) : Error("[" + phase + "] " + what), phase(phase) {}
  std::string phase;
};

}  // namespace fedgm
