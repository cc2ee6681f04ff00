#pragma once

#include <stdexcept>
#include <string>

namespace msem {

// Programming/contract bugs: wrong shapes, out-of-range classes, misuse.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ShapeError : ContractError {
  using ContractError::ContractError;
};

// Bad user-supplied data: malformed files, empty sentences, zero vectors.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary I/O failures, split into the classes callers must distinguish.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MagicError : IoError {
  using IoError::IoError;
};
struct VersionError : IoError {
  using IoError::IoError;
};
struct TruncatedError : IoError {
  using IoError::IoError;
};

}  // namespace msem
