#pragma once

#include <stdexcept>
#include <string>

namespace alqr {

/// Base of every error thrown by the library. `kind()` is a stable,
/// machine-readable tag used by the CLI error reports.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define ALQR_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

ALQR_DEFINE_ERROR(InvalidArgument);
ALQR_DEFINE_ERROR(UnstableMatrix);
ALQR_DEFINE_ERROR(NonConvergence);
ALQR_DEFINE_ERROR(IllConditioned);
ALQR_DEFINE_ERROR(DivergedState);
ALQR_DEFINE_ERROR(IncompleteLog);
ALQR_DEFINE_ERROR(EmptyWindow);
ALQR_DEFINE_ERROR(GenerationFailed);
ALQR_DEFINE_ERROR(IoError);

#undef ALQR_DEFINE_ERROR

/// Schema violation in a JSON config; `pointer()` is the RFC 6901 path of the
/// offending field.
class ConfigInvalid : public Error {
 public:
  ConfigInvalid(std::string pointer, const std::string& what)
      : Error("ConfigInvalid", pointer + ": " + what), pointer_(std::move(pointer)) {}

  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

}  // namespace alqr
