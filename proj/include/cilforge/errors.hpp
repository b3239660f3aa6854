#pragma once

#include <stdexcept>
#include <string>

namespace cilforge {

// Bad configuration or misuse of an interface contract. The CLI maps this
// to exit code 2.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failure during a run (non-finite loss, broken invariant). Exit code 1.
class TrainingError : public std::runtime_error {
public:
  explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

// Clip file I/O failures, one kind per failure class so callers can
// distinguish them.
class ClipIoError : public std::runtime_error {
public:
  enum class Kind {
    malformed_header,
    version_mismatch,
    truncated_payload,
    trailing_data,
  };

  ClipIoError(Kind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

}  // namespace cilforge
