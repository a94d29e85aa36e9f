#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aggr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data: out-of-range ids, broken offsets, bad file contents.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A kernel precondition does not hold (unsorted COO, mismatched shapes).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Unsupported configuration, e.g. an abstraction the model cannot run on.
class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Raised by the tracked allocator when an allocation fails or would exceed
/// the configured memory budget.
class OutOfMemoryError : public Error {
 public:
  explicit OutOfMemoryError(std::size_t attempted_bytes)
      : Error("out of memory: failed to allocate " + std::to_string(attempted_bytes) + " bytes"),
        attempted_bytes_(attempted_bytes) {}

  std::size_t attempted_bytes() const noexcept { return attempted_bytes_; }

 private:
  std::size_t attempted_bytes_;
};

}  // namespace aggr
