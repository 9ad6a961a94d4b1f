#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wvr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define WVR_DEFINE_ERROR(Name)          \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

WVR_DEFINE_ERROR(InvalidArgument);
WVR_DEFINE_ERROR(OverlapZero);
WVR_DEFINE_ERROR(NonPositiveWidth);
WVR_DEFINE_ERROR(ZeroPostselection);
WVR_DEFINE_ERROR(LossyFlipUnsupported);
WVR_DEFINE_ERROR(EmptyProfile);
WVR_DEFINE_ERROR(InvalidConfig);
WVR_DEFINE_ERROR(EmptyTagSet);
WVR_DEFINE_ERROR(FrequencyUnresolvable);
WVR_DEFINE_ERROR(OffsetsOutOfBand);
WVR_DEFINE_ERROR(MismatchedSweeps);

#undef WVR_DEFINE_ERROR

/// Parse failure in a time-tag file; carries the 1-based line number.
class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace wvr
