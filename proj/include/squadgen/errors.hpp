#pragma once

#include <stdexcept>
#include <string>

namespace squadgen {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace squadgen
