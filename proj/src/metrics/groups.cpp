// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/metrics/groups.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "biasbench/error.hpp"

namespace biasbench::metrics {

std::string ToString(const GroupKey& key) {
  std::string out = "y=" + std::to_string(key.y);
  for (std::size_t j = 0; j < key.b.size(); ++j) out += ",b" + std::to_string(j) + "=" + std::to_string(key.b[j]);
  return out;
}

const GroupStats* GroupTable::Find(const GroupKey& key) const {
  auto it = std::lower_bound(groups.begin(), groups.end(), key,
                             [](const GroupStats& g, const GroupKey& k) { return g.key < k; });
  return it != groups.end() && it->key == key ? &*it : nullptr;
}

GroupAssignment AssignGroups(const FactorView& view, std::span<const std::size_t> selection) {
  const std::size_t n = view.size();
  if (view.factors.size() != n * view.num_factors) {
    throw ValidationError("factor matrix does not match sample count");
  }
  for (auto j : selection) {
    if (j >= view.num_factors) throw ValidationError("explicit factor index out of range");
  }
  std::map<GroupKey, std::size_t> counts;
  std::vector<GroupKey> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    keys[i].y = view.labels[i];
    keys[i].b.reserve(selection.size());
    for (auto j : selection) keys[i].b.push_back(view.factors[i * view.num_factors + j]);
    ++counts[keys[i]];
  }
  GroupAssignment out;
  out.table.total = n;
  std::map<GroupKey, int> ids;
  for (const auto& [key, count] : counts) {
    ids.emplace(key, static_cast<int>(out.table.groups.size()));
    out.table.groups.push_back({key, count, 0, static_cast<double>(count) / static_cast<double>(n)});
  }
  out.group_of.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.group_of[i] = ids.at(keys[i]);
  return out;
}

void ScoreGroups(GroupAssignment& a, std::span<const std::uint8_t> correct) {
  if (correct.size() != a.group_of.size()) throw ValidationError("correctness vector has wrong length");
  for (auto& g : a.table.groups) g.correct = 0;
  for (std::size_t i = 0; i < correct.size(); ++i) a.table.groups[a.group_of[i]].correct += correct[i] ? 1 : 0;
}

double AccAlpha(const GroupTable& table, double alpha) {
  if (table.empty()) throw UndefinedMetricError("Acc(alpha) of an empty group table");
  std::vector<double> logw(table.size());
  double max_logw = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < table.size(); ++g) {
    if (!(table.groups[g].prior > 0.0)) throw ValidationError("group with non-positive prior");
    logw[g] = alpha == 0.0 ? 0.0 : alpha * std::log(table.groups[g].prior);
    max_logw = std::max(max_logw, logw[g]);
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t g = 0; g < table.size(); ++g) {
    const double w = std::exp(logw[g] - max_logw);
    num += w * table.groups[g].accuracy();
    den += w;
  }
  return num / den;
}

Json ToJson(const GroupTable& table) {
  Json groups = Json::array();
  for (const auto& g : table.groups) {
    groups.push_back({{"y", g.key.y}, {"b", g.key.b}, {"n", g.count}, {"correct", g.correct}});
  }
  return {{"total", table.total}, {"groups", groups}};
}

GroupTable GroupTableFromJson(const Json& json) {
  CheckKeys(json, {"total", "groups"}, "group table");
  GroupTable t;
  t.total = json.at("total").get<std::size_t>();
  for (const auto& g : json.at("groups")) {
    GroupStats s;
    s.key.y = g.at("y").get<int>();
    s.key.b = g.at("b").get<std::vector<int>>();
    s.count = g.at("n").get<std::size_t>();
    s.correct = g.at("correct").get<std::size_t>();
    s.prior = t.total ? static_cast<double>(s.count) / static_cast<double>(t.total) : 0.0;
    t.groups.push_back(std::move(s));
  }
  return t;
}

}  // namespace biasbench::metrics
