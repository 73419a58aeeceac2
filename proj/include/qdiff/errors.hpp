#pragma once

#include <stdexcept>
#include <string>

namespace qdiff {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A series or infinite product hit max_terms before reaching abs_tol.
struct NonConvergence : Error {
    using Error::Error;
};

// Argument is inside the guard distance of a pole of the requested quantity.
struct NearPole : Error {
    using Error::Error;
};

// Evaluation requested exactly at (or numerically on top of) a pole.
struct AtPole : Error {
    using Error::Error;
};

// Evaluation of a solution expression at a point of its singular set.
struct AtSingularity : Error {
    using Error::Error;
};

struct InvalidInput : Error {
    using Error::Error;
};

// Structurally valid input that violates a semantic rule (zero alpha,
// zero located at 0, modulus tie at a split threshold, ...).
struct SemanticError : Error {
    using Error::Error;
};

// A zero/pole modulus equals the binning threshold within tolerance.
struct TieAtThreshold : Error {
    using Error::Error;
};

struct UnsupportedInput : Error {
    using Error::Error;
};

struct ParseError : Error {
    std::size_t position;
    std::string expected;
    ParseError(std::size_t pos, const std::string& exp)
        : Error("parse error at position " + std::to_string(pos) + ": expected " + exp),
          position(pos), expected(exp) {}
};

// Contour would pass too close to a predicted singular point.
struct ContourTooClose : Error {
    using Error::Error;
};

// Winding integral did not land near an integer.
struct NonIntegerResult : Error {
    using Error::Error;
};

struct AllPointsSkipped : Error {
    using Error::Error;
};

struct AnnulusTooSmall : Error {
    using Error::Error;
};

struct EvaluationFailure : Error {
    using Error::Error;
};

} // namespace qdiff
