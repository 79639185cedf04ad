#pragma once

#include <stdexcept>
#include <string>

namespace treekd {

// Base class for every error thrown by the library. Module headers derive
// kind-carrying subclasses from this so callers can branch on the failure
// without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace treekd
