#pragma once

#include <stdexcept>
#include <string>

namespace smbr {

/// Malformed or inconsistent input data (corpus files, matrices, embeddings).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace smbr
