#include "rriqa/errors.hpp"

namespace rriqa {

const char* err_name(Err e) {
  switch (e) {
    case Err::UnsupportedFormat: return "UnsupportedFormat";
    case Err::CorruptFile: return "CorruptFile";
    case Err::TooSmall: return "TooSmall";
    case Err::NonRgb: return "NonRgb";
    case Err::BadDimensions: return "BadDimensions";
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::BadSelection: return "BadSelection";
    case Err::InvalidParams: return "InvalidParams";
    case Err::SingularSigma: return "SingularSigma";
    case Err::DegenerateData: return "DegenerateData";
    case Err::DidNotConverge: return "DidNotConverge";
    case Err::NoRootInBracket: return "NoRootInBracket";
    case Err::NoConvergence: return "NoConvergence";
    case Err::InvalidC: return "InvalidC";
    case Err::HypergeometricDomain: return "HypergeometricDomain";
    case Err::ParseError: return "ParseError";
    case Err::VersionMismatch: return "VersionMismatch";
    case Err::BadInput: return "BadInput";
    case Err::SelectionMismatch: return "SelectionMismatch";
    case Err::LengthMismatch: return "LengthMismatch";
    case Err::DegenerateVariance: return "DegenerateVariance";
    case Err::EmptyInput: return "EmptyInput";
    case Err::NonFinite: return "NonFinite";
    case Err::FitFailed: return "FitFailed";
    case Err::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace rriqa
