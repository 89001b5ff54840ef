#pragma once

#include <stdexcept>
#include <string>

namespace bellman {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : Error { using Error::Error; };
struct SingularityError : Error { using Error::Error; };
struct BracketError : Error { using Error::Error; };
struct ContinuationStall : Error { using Error::Error; };
struct DegenerateChord : Error { using Error::Error; };
struct ClassifyAmbiguity : Error { using Error::Error; };
struct DegenerateScale : Error { using Error::Error; };
struct CaseMismatch : Error { using Error::Error; };
struct TransformViolation : Error { using Error::Error; };
struct NoSolution : Error { using Error::Error; };
struct StepTooLarge : Error { using Error::Error; };

}  // namespace bellman
