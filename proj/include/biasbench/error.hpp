// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace biasbench {

// Base class for every error raised by the library. The CLI maps the kind to
// an exit code and a machine-readable error record.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    kValidation,       // bad configuration or argument
    kIngestion,        // unreadable or corrupt input file
    kNumeric,          // non-finite values
    kUndefinedMetric,  // metric has no support (e.g. empty minority side)
    kNotFound,         // missing trial, split, or group
    kIo,               // filesystem failure
  };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(Kind::kValidation, what) {}
};

class IngestionError : public Error {
 public:
  explicit IngestionError(const std::string& what) : Error(Kind::kIngestion, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(Kind::kNumeric, what) {}
};

class UndefinedMetricError : public Error {
 public:
  explicit UndefinedMetricError(const std::string& what)
      : Error(Kind::kUndefinedMetric, what) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& what) : Error(Kind::kNotFound, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(Kind::kIo, what) {}
};

const char* KindName(Error::Kind kind);

}  // namespace biasbench
