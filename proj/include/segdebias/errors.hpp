#pragma once

#include <stdexcept>
#include <string>

namespace segdebias {

enum class ErrorKind {
  config,         // bad configuration or schema violation
  input,          // invalid argument or malformed data
  numerical,      // non-finite values, degenerate norms, undefined statistics
  capability,     // encoder lacks a required feature (gradients, attention)
  provider,       // external mask provider failure
  missing_mask,   // no mask available for the requested attribute/sample
  io,             // file system or serialization failure
  generation,     // infeasible dataset proportions
  stratification, // split cannot satisfy group stratification
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

} // namespace segdebias
