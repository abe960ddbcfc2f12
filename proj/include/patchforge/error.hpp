#pragma once

#include <stdexcept>
#include <string>

namespace pf {

// Error hierarchy shared by all modules. The CLI maps these onto stable
// exit codes (config 2, missing artifact 3, corrupt input 4, internal 1).

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidParameterError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct ContractViolationError : Error {
    using Error::Error;
};

struct MissingArtifactError : Error {
    using Error::Error;
};

struct CorruptInputError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct DegenerateViewError : Error {
    using Error::Error;
};

struct RangeMisconfigurationError : Error {
    using Error::Error;
};

struct NumericalFailureError : Error {
    using Error::Error;
};

struct TrainingFailureError : Error {
    using Error::Error;
};

struct DegenerateVarianceError : Error {
    using Error::Error;
};

}  // namespace pf
