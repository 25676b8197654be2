#pragma once

#include <stdexcept>
#include <string>

namespace marior {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

// Unreadable, truncated or malformed files.
struct IoError : Error {
    using Error::Error;
};

struct FormatError : IoError {
    using IoError::IoError;
};

struct BadMagic : FormatError {
    using FormatError::FormatError;
};

struct DegenerateMask : Error {
    using Error::Error;
};

struct SingularSystem : Error {
    using Error::Error;
};

struct NoDocument : Error {
    using Error::Error;
};

struct PredictorFailed : Error {
    using Error::Error;
};

struct EmptyReference : Error {
    using Error::Error;
};

}  // namespace marior
