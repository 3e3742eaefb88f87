#pragma once

#include <stdexcept>
#include <string>

namespace graphcarve {

/// Failure categories. The CLI maps each category onto a process exit code.
enum class ErrorKind {
  Input,               // malformed input or violated precondition (exit 2)
  StageCollapse,       // a pipeline stage lost too much mass (exit 3)
  InvariantViolation,  // an internal consistency check failed (exit 4)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InputError : Error {
  explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

struct StageCollapseError : Error {
  explicit StageCollapseError(const std::string& what) : Error(ErrorKind::StageCollapse, what) {}
};

struct InvariantViolation : Error {
  explicit InvariantViolation(const std::string& what)
      : Error(ErrorKind::InvariantViolation, what) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return 2;
    case ErrorKind::StageCollapse: return 3;
    case ErrorKind::InvariantViolation: return 4;
  }
  return 1;
}

}  // namespace graphcarve
