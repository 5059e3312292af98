#pragma once

#include <stdexcept>
#include <string>

namespace lotkit {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Configuration / usage problems (CLI exit code 1).
struct ConfigError : Error { using Error::Error; };

// Data problems: malformed or inconsistent inputs (CLI exit code 2).
struct IoError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct RangeError : Error { using Error::Error; };
struct DuplicateId : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct UnknownCategory : Error { using Error::Error; };
struct MissingLayer : Error { using Error::Error; };
struct EmptyLayer : Error { using Error::Error; };
struct SchemaMismatch : Error { using Error::Error; };
struct MissingConversionLabels : Error { using Error::Error; };
struct DegenerateTraining : Error { using Error::Error; };
struct TooFewPerClass : Error { using Error::Error; };
struct InvalidFractions : Error { using Error::Error; };

// Runtime failures (CLI exit code 3).
struct NonFiniteLoss : Error { using Error::Error; };
struct EmptyMatrix : Error { using Error::Error; };

}  // namespace lotkit
