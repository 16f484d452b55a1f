#pragma once

#include <stdexcept>
#include <string>

namespace dstt {

// Error categories map one-to-one onto CLI exit codes (see tools/).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace dstt
