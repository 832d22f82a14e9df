// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "biasbench/data/dataset.hpp"
#include "biasbench/json_util.hpp"

namespace biasbench::data {

// Binary label y, binary bias factor b, low-dimensional Gaussian features:
//   x[0] = (2y-1) * signal_margin + N(0,1)
//   x[1] = (2b-1) * bias_margin   + N(0,1)
//   x[2..] = N(0,1) noise
// Group priors: P(y=1,b=0) = rare_fraction, P(y=0,b=1) = 1-correlation-rare,
// P(y=1,b=1) = 1/2 - rare, P(y=0,b=0) = correlation - 1/2 + rare. Hence
// P(b=y) = correlation and both classes have prior 1/2.
struct GroupTaskSpec {
  double rare_fraction = 0.01;
  double correlation = 0.95;
  std::size_t n_train = 100000;
  std::size_t n_val = 20000;
  std::size_t n_test = 20000;
  std::uint64_t seed = 0;
  double signal_margin = 1.0;
  double bias_margin = 3.0;
  int noise_dims = 2;

  std::size_t SizeOf(Split split) const;
  void Validate() const;
};

// Indexed by 2*y + b.
std::array<double, 4> GroupPriors(const GroupTaskSpec& spec);

// Largest-remainder rounding of priors * n, so realized counts sum to n.
std::array<std::size_t, 4> GroupCounts(const GroupTaskSpec& spec, std::size_t n);

Dataset GenerateGroupTask(const GroupTaskSpec& spec);

Json ToJson(const GroupTaskSpec& spec);
GroupTaskSpec GroupTaskSpecFromJson(const Json& json);

}  // namespace biasbench::data
