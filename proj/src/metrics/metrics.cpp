// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/metrics/metrics.hpp"

#include <cmath>

#include "biasbench/error.hpp"

namespace biasbench::metrics {

MajMin Mmd(std::span<const std::uint8_t> correct, std::span<const std::uint8_t> is_majority,
           std::string_view factor) {
  if (correct.size() != is_majority.size()) throw ValidationError("mmd: length mismatch");
  MajMin out;
  std::size_t maj_correct = 0;
  std::size_t min_correct = 0;
  for (std::size_t i = 0; i < correct.size(); ++i) {
    if (is_majority[i]) {
      ++out.n_majority;
      maj_correct += correct[i] ? 1 : 0;
    } else {
      ++out.n_minority;
      min_correct += correct[i] ? 1 : 0;
    }
  }
  if (out.n_majority == 0 || out.n_minority == 0) {
    throw UndefinedMetricError("mmd undefined for factor '" + std::string(factor) + "': " +
                               (out.n_majority == 0 ? "no majority samples" : "no minority samples"));
  }
  out.majority = static_cast<double>(maj_correct) / out.n_majority;
  out.minority = static_cast<double>(min_correct) / out.n_minority;
  return out;
}

std::map<GroupKey, double> Iosm(const GroupTable& report, const GroupTable& baseline) {
  if (report.size() != baseline.size()) throw ValidationError("iosm: group keys differ");
  std::map<GroupKey, double> out;
  for (std::size_t g = 0; g < report.size(); ++g) {
    const auto& a = report.groups[g];
    const auto& b = baseline.groups[g];
    if (!(a.key == b.key)) throw ValidationError("iosm: group keys differ at " + ToString(a.key));
    out.emplace(a.key, a.accuracy() - b.accuracy());
  }
  return out;
}

double TailAccuracy(std::span<const int> local_group, std::span<const int> answer,
                    std::span<const std::uint8_t> correct, double beta) {
  if (!(beta >= 0.0)) throw ValidationError("tail accuracy needs beta >= 0");
  const std::size_t n = answer.size();
  if (local_group.size() != n || correct.size() != n) throw ValidationError("tail accuracy: length mismatch");
  std::map<int, std::map<int, std::size_t>> counts;
  for (std::size_t i = 0; i < n; ++i) ++counts[local_group[i]][answer[i]];
  std::map<int, double> threshold;
  for (const auto& [group, per_answer] : counts) {
    double total = 0.0;
    for (const auto& [a, c] : per_answer) total += static_cast<double>(c);
    threshold[group] = (1.0 + beta) * total / static_cast<double>(per_answer.size());
  }
  std::size_t tail = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = static_cast<double>(counts[local_group[i]][answer[i]]);
    if (c <= threshold[local_group[i]]) {
      ++tail;
      hits += correct[i] ? 1 : 0;
    }
  }
  if (tail == 0) throw UndefinedMetricError("tail accuracy: no tail samples at beta=" + std::to_string(beta));
  return static_cast<double>(hits) / static_cast<double>(tail);
}

}  // namespace biasbench::metrics
