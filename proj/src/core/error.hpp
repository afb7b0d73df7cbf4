#pragma once

#include <stdexcept>
#include <string>

namespace paleo {

/// Failure categories. The C API maps these one-to-one onto status codes.
enum class ErrorCode {
  invalid_argument = 1,
  structural,       // dimension or grid mismatch between operands
  config,           // scenario/configuration rejected before compute
  contract,         // a precondition on the physical state was violated
  out_of_domain,
  node_encounter,   // a node of the wave function was hit where it is not allowed
  pre_caustic,      // pre-Schrödinger evolution reached a zero inside the support
  no_convergence,
  insufficient_data,
  io,
  no_classical_path,  // shooting found no path between the endpoints
  conjugate_point,    // the requested window reaches a conjugate point
  horizon_too_short,  // a caustic came before any comparison window
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace paleo
