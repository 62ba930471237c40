#pragma once

#include <stdexcept>
#include <string>

namespace ndp {

enum class ErrorKind {
  Structural,  // graph invariant violated (cycle, self-loop, dim mismatch)
  Shape,       // tensor shape mismatch
  Contract,    // precondition violated by the caller
  Mode,        // operation not valid for the graph's mode
  Metric,      // metric undefined for this graph (disconnected, degenerate)
  Sampling,    // degenerate probability mass
  Parse,       // malformed file or config
  Io,          // filesystem failure
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Structural: return "structural error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Contract: return "contract error";
    case ErrorKind::Mode: return "mode error";
    case ErrorKind::Metric: return "metric error";
    case ErrorKind::Sampling: return "sampling error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + msg),
        kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace ndp
