#pragma once

#include <stdexcept>
#include <string>

namespace mgw {

enum class ErrorKind {
  Dimension,        // mismatched vector / matrix sizes
  Config,           // invalid parameters (rho, eps, penalties, trees)
  EmptySupport,     // image thresholding removed every pixel
  Precondition,     // operation called outside its contract
  Infeasible,       // balanced marginal cannot be met by the kernel
  InfeasibleIterate,// divergence of an iterate is infinite
  DegenerateMass,   // plan mass underflowed
  NumericalFailure, // NaN in an objective
  UnsupportedPair,  // marginal requested for a non-edge
  UnsupportedScale, // dense-only operation above its size limit
  Parse,            // malformed input file
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mgw
