#pragma once

#include <stdexcept>
#include <string>

namespace glocal {

/// Base of every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GLOCAL_DEFINE_ERROR(Name)           \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  };

GLOCAL_DEFINE_ERROR(IOError)
GLOCAL_DEFINE_ERROR(ValueError)
GLOCAL_DEFINE_ERROR(DuplicateError)
GLOCAL_DEFINE_ERROR(EmptyInputError)
GLOCAL_DEFINE_ERROR(GridError)
GLOCAL_DEFINE_ERROR(InsufficientDataError)
GLOCAL_DEFINE_ERROR(ShapeError)
GLOCAL_DEFINE_ERROR(NumericError)
GLOCAL_DEFINE_ERROR(CardinalityError)
GLOCAL_DEFINE_ERROR(UnknownSeriesError)
GLOCAL_DEFINE_ERROR(ZeroActualError)
GLOCAL_DEFINE_ERROR(NormalizationError)
GLOCAL_DEFINE_ERROR(DegenerateWindow)
GLOCAL_DEFINE_ERROR(ConfigError)

#undef GLOCAL_DEFINE_ERROR

/// A missing half-hour in a series. Carries the offending series id and the
/// first timestamp after the gap.
class GapError : public Error {
 public:
  GapError(std::string id, std::string timestamp)
      : Error("gap in series '" + id + "' before " + timestamp),
        id_(std::move(id)),
        timestamp_(std::move(timestamp)) {}

  const std::string& id() const noexcept { return id_; }
  const std::string& timestamp() const noexcept { return timestamp_; }

 private:
  std::string id_;
  std::string timestamp_;
};

}  // namespace glocal
