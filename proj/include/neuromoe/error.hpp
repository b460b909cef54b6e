// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace neuromoe {

enum class ErrorKind : std::uint8_t {
  Dimension,
  Validation,
  Contract,
  Format,
  Checksum,
  ConfigMismatch,
  Io,
  Numeric,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base of every exception thrown by the library. The kind drives the
/// C API status code and the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorKind::Dimension, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::Validation, what) {}
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what)
      : Error(ErrorKind::Contract, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::Numeric, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class ConfigMismatchError : public Error {
 public:
  explicit ConfigMismatchError(const std::string& what)
      : Error(ErrorKind::ConfigMismatch, what) {}
};

// Malformed binary input. Carries the byte offset at which decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset,
              ErrorKind kind = ErrorKind::Format)
      : Error(kind, what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class ChecksumError : public FormatError {
 public:
  ChecksumError(const std::string& what, std::uint64_t offset)
      : FormatError(what, offset, ErrorKind::Checksum) {}
};

}  // namespace neuromoe
