#pragma once

#include <stdexcept>
#include <string>

namespace pspin {

enum class ErrorKind {
  InvalidArgument,
  Precondition,
  Domain,
  NotConverged,
  Resource,
  Inconsistent,
  Config,
  Io
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct PreconditionError : Error {
  explicit PreconditionError(const std::string& w) : Error(ErrorKind::Precondition, w) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::Domain, w) {}
};

struct ResourceError : Error {
  explicit ResourceError(const std::string& w) : Error(ErrorKind::Resource, w) {}
};

struct InconsistentError : Error {
  explicit InconsistentError(const std::string& w) : Error(ErrorKind::Inconsistent, w) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};

}  // namespace pspin
