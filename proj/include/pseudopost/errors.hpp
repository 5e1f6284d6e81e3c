#pragma once

#include <stdexcept>

namespace pseudopost {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct SingularDesign : Error { using Error::Error; };
struct EmptyBatch : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct EmptyChain : Error { using Error::Error; };
struct NonPositiveBandwidth : Error { using Error::Error; };
struct NonPositiveCovariate : Error { using Error::Error; };
struct NonFiniteValue : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct ZeroNormalizer : Error { using Error::Error; };
struct CouplingViolated : Error { using Error::Error; };
struct ScheduleViolation : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace pseudopost
