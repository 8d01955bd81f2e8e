#pragma once

#include <stdexcept>
#include <string>

namespace mathsum {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input or contract violation by the caller. The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Failure while running an otherwise valid request. The CLI maps these to exit code 2.
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

#define MATHSUM_DEFINE_ERROR(Name, Base) \
  class Name : public Base {             \
   public:                               \
    using Base::Base;                    \
  };

MATHSUM_DEFINE_ERROR(MathTokenizeError, ValidationError)
MATHSUM_DEFINE_ERROR(UnbalancedDelimiterError, ValidationError)
MATHSUM_DEFINE_ERROR(UnsupportedDelimiterError, ValidationError)
MATHSUM_DEFINE_ERROR(InvalidPairError, ValidationError)
MATHSUM_DEFINE_ERROR(EmptyCorpusError, ValidationError)
MATHSUM_DEFINE_ERROR(IdOutOfRangeError, ValidationError)
MATHSUM_DEFINE_ERROR(SpanOutOfRangeError, ValidationError)
MATHSUM_DEFINE_ERROR(ShapeMismatchError, ValidationError)
MATHSUM_DEFINE_ERROR(StateDimMismatchError, ValidationError)
MATHSUM_DEFINE_ERROR(UnbalancedMarkerError, ValidationError)
MATHSUM_DEFINE_ERROR(NoSentenceError, ValidationError)
MATHSUM_DEFINE_ERROR(ConfigError, ValidationError)
MATHSUM_DEFINE_ERROR(FormatError, ValidationError)

MATHSUM_DEFINE_ERROR(DivergenceError, RuntimeFailure)
MATHSUM_DEFINE_ERROR(ZeroProbabilityError, RuntimeFailure)
MATHSUM_DEFINE_ERROR(NoHypothesisError, RuntimeFailure)
MATHSUM_DEFINE_ERROR(IoError, RuntimeFailure)

#undef MATHSUM_DEFINE_ERROR

}  // namespace mathsum
