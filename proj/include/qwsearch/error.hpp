#pragma once

#include <stdexcept>
#include <string>

namespace qws {

/// Process exit codes used by the command-line front end.
enum class ExitCode : int { ok = 0, config = 2, numerical = 3, io = 4 };

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid input: bad graph order, out-of-domain parameter, insufficient sample.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::config, what) {}
};

/// A time or index outside the valid window of a trajectory or schedule.
class RangeError : public ConfigError {
 public:
  explicit RangeError(const std::string& what) : ConfigError(what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ExitCode::numerical, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ExitCode::io, what) {}
};

}  // namespace qws
