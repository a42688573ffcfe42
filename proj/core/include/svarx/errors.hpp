#pragma once

#include <stdexcept>
#include <string>

namespace svarx {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error { using Error::Error; };

// time series
struct SeriesTooShort : Error { using Error::Error; };
struct MissingHistory : Error { using Error::Error; };
struct IndexMismatch : Error { using Error::Error; };
struct NonPositiveTotal : Error { using Error::Error; };
struct NoOverlap : Error { using Error::Error; };

// ingestion
struct ParseError : Error { using Error::Error; };
struct GapError : Error { using Error::Error; };
struct DuplicateError : Error { using Error::Error; };
struct UnknownState : Error { using Error::Error; };
struct InvalidSpec : Error { using Error::Error; };

// design / solver
struct NotAligned : Error { using Error::Error; };
struct TooFewRows : Error { using Error::Error; };
struct BadLag : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct BadGrid : Error { using Error::Error; };

// model / evaluation
struct InsufficientHistory : Error { using Error::Error; };
struct MissingFutures : Error { using Error::Error; };
struct MissingModel : Error { using Error::Error; };

// i/o
struct IoError : Error { using Error::Error; };

}  // namespace svarx
