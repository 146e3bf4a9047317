#pragma once

#include <stdexcept>

namespace pse {

// Error taxonomy mirrored by the CLI exit codes: usage errors exit 2,
// Format/Data/Config errors exit 3, Numeric errors exit 4.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pse
