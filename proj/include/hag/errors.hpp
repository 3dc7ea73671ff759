#pragma once

#include <stdexcept>

#include "hag/autodiff.hpp"

namespace hag {

// Bad input data: malformed files, unresolved references, empty corpora.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or command-line usage.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hag
