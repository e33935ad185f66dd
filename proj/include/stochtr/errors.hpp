#pragma once

#include <stdexcept>
#include <string>

namespace stochtr {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define STOCHTR_DEFINE_ERROR(Name)       \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

STOCHTR_DEFINE_ERROR(InvalidField);
STOCHTR_DEFINE_ERROR(InvalidMollifier);
STOCHTR_DEFINE_ERROR(GridMismatch);
STOCHTR_DEFINE_ERROR(NonInvertibleFlow);
STOCHTR_DEFINE_ERROR(InsufficientSamples);
STOCHTR_DEFINE_ERROR(UnstableConfig);
STOCHTR_DEFINE_ERROR(UnresolvedMollifier);
STOCHTR_DEFINE_ERROR(InvalidTestFunction);
STOCHTR_DEFINE_ERROR(ConfigError);

#undef STOCHTR_DEFINE_ERROR

}  // namespace stochtr
