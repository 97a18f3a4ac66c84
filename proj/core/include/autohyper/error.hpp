#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace autohyper {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the operation's mathematical domain (e.g. unfolding mode 2).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent values: shapes, non-finite data, bad bounds.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// A probe grid with missing (layer, mode, epoch) cells or a gap in an epoch sequence.
class IncompleteProbeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Binary file decoding failure. offset() is the byte position where decoding stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace autohyper
