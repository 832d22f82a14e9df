// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "biasbench/error.hpp"
#include "biasbench/rng.hpp"

namespace biasbench {

const char* KindName(Error::Kind kind) {
  switch (kind) {
    case Error::Kind::kValidation: return "validation";
    case Error::Kind::kIngestion: return "ingestion";
    case Error::Kind::kNumeric: return "numeric";
    case Error::Kind::kUndefinedMetric: return "undefined_metric";
    case Error::Kind::kNotFound: return "not_found";
    case Error::Kind::kIo: return "io";
  }
  return "unknown";
}

double Rng::Normal() {
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace biasbench
