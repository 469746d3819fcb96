#pragma once

#include <stdexcept>
#include <string>

namespace fkmd {

enum class ErrorCode {
  invalid_argument,   // malformed input, precondition violated
  not_monotone,       // f failed the monotonicity probe
  horizon_too_small,  // censored fraction above threshold
  no_convergence,     // Picard iteration exhausted max_iterations
  no_kernel,          // no exact kernel for operator/domain pair
  quadrature_failed,  // refinement did not settle
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, const std::string& what, ErrorCode code = ErrorCode::invalid_argument) {
  if (!cond) throw Error(code, what);
}

}  // namespace fkmd
