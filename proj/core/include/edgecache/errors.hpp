#pragma once

#include <stdexcept>
#include <string>

namespace edgecache {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input violates a declared invariant (bad demand, zero reservation, ...).
/// `path` locates the offending field, e.g. "/providers/1/classes/0/count".
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string path = {})
      : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

enum class SolverFailure {
  DegenerateInput,      // e.g. negative caching rate
  NoContent,            // every class has demand * availability == 0
  Precondition,         // sortedness or size requirement not met
  InternalConsistency,  // e.g. clearing equation failed to bracket
};

class SolverError : public Error {
 public:
  SolverError(SolverFailure kind, const std::string& message) : Error(message), kind_(kind) {}

  SolverFailure kind() const noexcept { return kind_; }

 private:
  SolverFailure kind_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace edgecache
