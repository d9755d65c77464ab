#pragma once

#include <stdexcept>
#include <string>

namespace avis {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed run-length data (sum mismatch, negative runs).
struct CodecError : Error {
    using Error::Error;
};

// Incompatible mask or track geometry (dimension or length mismatch).
struct GeometryError : Error {
    using Error::Error;
};

// Unreadable or unwritable files.
struct IoError : Error {
    using Error::Error;
};

// Lookup of an id that does not exist in a manifest.
struct LookupError : Error {
    using Error::Error;
};

// Infeasible synthetic scene specification.
struct GenerationError : Error {
    using Error::Error;
};

// Reference evaluator refuses inputs beyond desk scale.
struct OracleScaleError : Error {
    using Error::Error;
};

}  // namespace avis
