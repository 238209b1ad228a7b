#pragma once

#include <stdexcept>
#include <string>

namespace rriqa {

// Every failure the library reports, one code per condition the callers
// (tests, CLI exit-code mapping) need to distinguish.
enum class Err {
  // image decoding / geometry
  UnsupportedFormat,
  CorruptFile,
  TooSmall,
  NonRgb,
  BadDimensions,
  DimensionMismatch,
  // pyramid
  BadSelection,
  // model fitting
  InvalidParams,
  SingularSigma,
  DegenerateData,
  DidNotConverge,
  NoRootInBracket,
  // special functions
  NoConvergence,
  InvalidC,
  HypergeometricDomain,
  // feature files / manifests
  ParseError,
  VersionMismatch,
  // statistics
  BadInput,
  SelectionMismatch,
  LengthMismatch,
  DegenerateVariance,
  EmptyInput,
  NonFinite,
  FitFailed,
  // filesystem
  IoError,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& message)
      : std::runtime_error(std::string(err_name(code)) + ": " + message),
        code_(code) {}

  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace rriqa
