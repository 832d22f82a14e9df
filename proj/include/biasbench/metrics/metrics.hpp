// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biasbench/metrics/groups.hpp"

namespace biasbench::metrics {

struct MajMin {
  double majority = 0.0;
  double minority = 0.0;
  std::size_t n_majority = 0;
  std::size_t n_minority = 0;

  double mmd() const { return majority - minority; }
};

// Accuracy on samples whose factor takes its class-aligned value minus
// accuracy on the rest. Throws UndefinedMetricError if either side is empty.
MajMin Mmd(std::span<const std::uint8_t> correct, std::span<const std::uint8_t> is_majority,
           std::string_view factor);

// Acc_g(report) - Acc_g(baseline) for every group. Both tables must have the
// same keys.
std::map<GroupKey, double> Iosm(const GroupTable& report, const GroupTable& baseline);

// Accuracy over samples whose answer class is a tail class of its local
// group: count(answer) <= (1 + beta) * mean count over answers present in
// that group.
double TailAccuracy(std::span<const int> local_group, std::span<const int> answer,
                    std::span<const std::uint8_t> correct, double beta);

}  // namespace biasbench::metrics
