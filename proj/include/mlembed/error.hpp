#pragma once

#include <stdexcept>
#include <string>

namespace mlembed {

enum class ErrorKind {
  parse,        // malformed document or points file
  dimension,    // vector/matrix sizes do not chain
  validation,   // model invariant violated (topology, singular kernel, ...)
  domain,       // point outside the model's domain
  numeric,      // non-finite intermediate, division by zero, breakdown
  unsupported,  // operation not defined for this model kind
  config,       // inconsistent command-line / run configuration
  internal,     // invariant breach inside the engine
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace mlembed
