#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sage {

/// Base class for everything thrown on purpose by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A caller broke a documented precondition (bad dimension, empty input,
/// out-of-range parameter). These indicate bugs at the call site, not
/// recoverable runtime conditions.
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what) : Error(what) {}
};

/// Invalid or inconsistent configuration (file or programmatic).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Network-level failure talking to a remote service. `retryable` tells the
/// caller whether another attempt could plausibly succeed (timeouts, 5xx)
/// or not (4xx, TLS URL on a plain-HTTP build).
class TransportError : public Error {
 public:
  TransportError(const std::string& what, std::string endpoint, bool retryable)
      : Error(what), endpoint_(std::move(endpoint)), retryable_(retryable) {}
  const std::string& endpoint() const { return endpoint_; }
  bool retryable() const { return retryable_; }

 private:
  std::string endpoint_;
  bool retryable_;
};

/// A response arrived but could not be interpreted. Keeps the raw payload
/// so callers can log it.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

/// Filesystem trouble: missing files, short reads, unwritable directories.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

/// Persisted artifact was written by an incompatible format revision.
class VersionMismatchError : public IoError {
 public:
  explicit VersionMismatchError(const std::string& what) : IoError(what) {}
};

/// Persisted artifact failed its integrity check.
class ChecksumError : public IoError {
 public:
  explicit ChecksumError(const std::string& what) : IoError(what) {}
};

/// Loaded model whose parameters are unusable (non-finite, wrong shape).
class CorruptModelError : public Error {
 public:
  explicit CorruptModelError(const std::string& what) : Error(what) {}
};

/// Training produced a non-finite loss or non-finite parameters.
class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(const std::string& what, std::size_t epoch)
      : Error(what), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Not enough data to honor a sampling request.
class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& what) : Error(what) {}
};

/// Two things that must agree do not (e.g. stale id reused with different
/// payload, index metadata vs. query-time configuration).
class ConflictError : public Error {
 public:
  explicit ConflictError(const std::string& what) : Error(what) {}
};

/// Query against an index with no content.
class EmptyIndexError : public Error {
 public:
  explicit EmptyIndexError(const std::string& what) : Error(what) {}
};

/// A scripted mock client ran past the end of its script.
class ScriptExhaustedError : public Error {
 public:
  explicit ScriptExhaustedError(const std::string& what) : Error(what) {}
};

/// Corpus ingestion produced nothing usable.
class BuildError : public Error {
 public:
  explicit BuildError(const std::string& what) : Error(what) {}
};

/// Cost-efficiency is undefined when the denominator cost is zero.
class UndefinedEfficiencyError : public Error {
 public:
  explicit UndefinedEfficiencyError(const std::string& what) : Error(what) {}
};

}  // namespace sage
