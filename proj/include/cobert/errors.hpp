#pragma once
// Error types shared across the library. Each maps to one failure class the
// public operations are allowed to raise; everything else is a bug.

#include <stdexcept>
#include <string>

namespace cobert {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A softmax/pool input whose mask admits no valid position.
struct DegenerateMaskError : Error {
    using Error::Error;
};

// Shape mismatches, empty required inputs, out-of-range ids.
struct InvalidInputError : Error {
    using Error::Error;
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
    using Error::Error;
};

// Bad run/training/generator configuration (pool too small, caps, ratios).
struct ConfigError : Error {
    using Error::Error;
};

// Thread input that is not a tree: cycles, missing or duplicate roots.
struct MalformedThreadError : Error {
    using Error::Error;
};

// CLI usage problems; the driver turns these into exit code 2.
struct UsageError : Error {
    using Error::Error;
};

}  // namespace cobert
