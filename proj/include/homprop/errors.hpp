#pragma once

#include <stdexcept>
#include <string>

namespace homprop {

/// Failure categories; each maps onto a CLI exit code.
enum class ErrorKind {
  Input = 2,          // malformed words, configs, mismatched presentations
  Certification = 3,  // a numerical result could not be certified
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

#define HOMPROP_DEFINE_ERROR(Name, Kind)                                       \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string &what) : Error(ErrorKind::Kind, what) {}   \
  };

HOMPROP_DEFINE_ERROR(MalformedWord, Input)
HOMPROP_DEFINE_ERROR(PresentationMismatch, Input)
HOMPROP_DEFINE_ERROR(DimensionMismatch, Input)
HOMPROP_DEFINE_ERROR(NotApplicable, Input)
HOMPROP_DEFINE_ERROR(InvalidArgument, Input)
HOMPROP_DEFINE_ERROR(ConfigError, Input)
HOMPROP_DEFINE_ERROR(AmbiguousLift, Certification)
HOMPROP_DEFINE_ERROR(NotALoop, Input)
HOMPROP_DEFINE_ERROR(DeltaLimit, Input)
HOMPROP_DEFINE_ERROR(CutoffTooSmall, Certification)
HOMPROP_DEFINE_ERROR(ReflectionContamination, Certification)
HOMPROP_DEFINE_ERROR(Aliasing, Certification)
HOMPROP_DEFINE_ERROR(NonConvergence, Certification)

#undef HOMPROP_DEFINE_ERROR

} // namespace homprop
