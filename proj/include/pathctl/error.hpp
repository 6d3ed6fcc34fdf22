#pragma once

#include <stdexcept>
#include <string>

namespace pathctl {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  OutOfRange,
  NonFinite,
  CapExceeded,
  Contract,
  Divergence,
  Config,
};

// Single exception type for the core. The C API maps `kind()` onto status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace pathctl
