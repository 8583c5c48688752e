#pragma once

#include <stdexcept>
#include <string>

namespace dhcosim {

// Root of every error raised by the library. The `code()` string is stable and
// is what the CLI reports in its machine-readable error list.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define DHCOSIM_DEFINE_ERROR(Name)                                  \
  class Name : public ::dhcosim::Error {                            \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name, what) {}  \
  }

DHCOSIM_DEFINE_ERROR(InvalidArgument);
DHCOSIM_DEFINE_ERROR(AllPointsExpired);
DHCOSIM_DEFINE_ERROR(OutOfRange);
DHCOSIM_DEFINE_ERROR(NotProducer);
DHCOSIM_DEFINE_ERROR(UnknownSlot);
DHCOSIM_DEFINE_ERROR(KindMismatch);
DHCOSIM_DEFINE_ERROR(IoError);

}  // namespace dhcosim
