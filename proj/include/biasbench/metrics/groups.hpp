// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biasbench/json_util.hpp"

namespace biasbench::metrics {

// Group g = (y, b_1..b_E) over the explicit factors, in selection order.
struct GroupKey {
  int y = 0;
  std::vector<int> b;

  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
  friend bool operator==(const GroupKey&, const GroupKey&) = default;
};

std::string ToString(const GroupKey& key);

struct GroupStats {
  GroupKey key;
  std::size_t count = 0;
  std::size_t correct = 0;
  double prior = 0.0;

  double accuracy() const { return count ? static_cast<double>(correct) / count : 0.0; }
  friend bool operator==(const GroupStats&, const GroupStats&) = default;
};

// Populated groups only, sorted by key. Priors are N_g / N.
struct GroupTable {
  std::vector<GroupStats> groups;
  std::size_t total = 0;

  std::size_t size() const { return groups.size(); }
  bool empty() const { return groups.empty(); }
  const GroupStats* Find(const GroupKey& key) const;
  friend bool operator==(const GroupTable&, const GroupTable&) = default;
};

// Sample-major factor matrix view: factors[i * num_factors + j].
struct FactorView {
  std::span<const int> labels;
  std::span<const int> factors;
  std::size_t num_factors = 0;

  std::size_t size() const { return labels.size(); }
};

struct GroupAssignment {
  std::vector<int> group_of;  // index into table.groups, per sample
  GroupTable table;           // correct counts are zero until scored
};

// Keys samples by (y, selected factors). An empty selection keys by y alone.
GroupAssignment AssignGroups(const FactorView& view, std::span<const std::size_t> selection);

// Fills correct counts from per-sample correctness.
void ScoreGroups(GroupAssignment& assignment, std::span<const std::uint8_t> correct);

// Sum_g p_g^alpha Acc_g / Sum_g p_g^alpha, evaluated in log space.
double AccAlpha(const GroupTable& table, double alpha);

Json ToJson(const GroupTable& table);
GroupTable GroupTableFromJson(const Json& json);

}  // namespace biasbench::metrics
