#pragma once

#include <stdexcept>
#include <string>

namespace momentpoly {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// checked integer arithmetic exceeded 64 bits
struct OverflowError : Error {
    using Error::Error;
};

// index vector not canonical, out of range, or malformed
struct InvalidIndexError : Error {
    using Error::Error;
};

// position or argument outside its valid range
struct RangeError : Error {
    using Error::Error;
};

// malformed input: dimension mismatch, non-finite values, bad CSV, bad config
struct InputError : Error {
    using Error::Error;
};

// requested moment order not tracked by the accumulator
struct OrderError : Error {
    using Error::Error;
};

// zero total weight or an empty class
struct EmptySampleError : Error {
    using Error::Error;
};

// factorization hit an exactly singular pivot at lambda = 0
struct SingularSystemError : Error {
    using Error::Error;
};

// model document failed to parse or violates its schema
struct LoadError : Error {
    using Error::Error;
};

// invalid mixture specification
struct SpecError : Error {
    using Error::Error;
};

// optimal response queried where both class densities vanish
struct UndefinedPointError : Error {
    using Error::Error;
};

// purity curve has no populated bins
struct DegenerateCurveError : Error {
    using Error::Error;
};

}  // namespace momentpoly
