#pragma once

#include <stdexcept>
#include <string>

namespace splicegan {

// Base error. exit_code() maps onto the CLI contract:
//   2 = config / IO problem, 3 = numeric failure, 4 = missing artifact.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg, int exit_code = 2)
      : std::runtime_error(msg), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg, 2) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg, 2) {}
};

class MissingArtifactError : public Error {
 public:
  explicit MissingArtifactError(const std::string& msg) : Error(msg, 4) {}
};

class NonFiniteLossError : public Error {
 public:
  explicit NonFiniteLossError(const std::string& msg) : Error(msg, 3) {}
};

// Dataset synthesis
class OutOfBoundsError : public Error {
 public:
  explicit OutOfBoundsError(const std::string& msg) : Error(msg) {}
};
class EmptySpriteError : public Error {
 public:
  explicit EmptySpriteError(const std::string& msg) : Error(msg) {}
};
class InsufficientBasesError : public Error {
 public:
  explicit InsufficientBasesError(const std::string& msg) : Error(msg) {}
};
class QuotaUnsatisfiableError : public Error {
 public:
  explicit QuotaUnsatisfiableError(const std::string& msg) : Error(msg) {}
};

// Model / tensor plumbing
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};
class BadCheckpointError : public Error {
 public:
  explicit BadCheckpointError(const std::string& msg) : Error(msg, 4) {}
};

// Evaluation
class DegenerateLabelsError : public Error {
 public:
  explicit DegenerateLabelsError(const std::string& msg) : Error(msg) {}
};
class NoPositivesError : public Error {
 public:
  explicit NoPositivesError(const std::string& msg) : Error(msg) {}
};
class NoDetectedForgeriesError : public Error {
 public:
  explicit NoDetectedForgeriesError(const std::string& msg) : Error(msg) {}
};
class EmptyListError : public Error {
 public:
  explicit EmptyListError(const std::string& msg) : Error(msg) {}
};

}  // namespace splicegan
