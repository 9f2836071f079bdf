#pragma once

#include <stdexcept>
#include <string>

namespace attnseg {

// Invalid architecture, training, or pipeline configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data handed to an operation does not satisfy its contract.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file failed its checksum or structural validation.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace attnseg
