// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biasbench/expcli/record.hpp"
#include "biasbench/json_util.hpp"
#include "biasbench/sweep/sweep.hpp"

namespace biasbench::expcli {

// Every table here is a pure function of the trial records it is given.

// "<kind>:<first 8 hex of the identity hash>"
std::string DatasetLabel(const Json& identity);

// The selected configuration of one method on one dataset. `seeds` holds every
// successful trial that differs from the winner only in its seed.
struct MethodSelection {
  std::string dataset;
  Json dataset_identity;
  std::string method;
  const TrialRecord* winner = nullptr;
  std::vector<const TrialRecord*> seeds;
};

// Winner per (dataset, method) by validation Acc(policy.alpha). Datasets
// ordered by label, methods in canonical order. Pairs without a successful
// trial are omitted.
std::vector<MethodSelection> SelectPerMethod(std::span<const TrialRecord> trials,
                                             const sweep::SelectionPolicy& policy);

// Mean of `fn` over selection.seeds, skipping empty values.
template <typename Fn>
std::optional<double> SeedMean(const MethodSelection& s, Fn&& fn) {
  double sum = 0.0;
  int n = 0;
  for (const auto* r : s.seeds) {
    if (auto v = fn(*r)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

struct Table {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<std::optional<double>>> cells;  // fractions in [0, 1]
};

enum class ReportKind { kOverall, kPerGroup, kPerFactor };
ReportKind ParseReportKind(std::string_view name);

// overall:    rows = methods, columns = datasets, cell = test Acc(0)
// per-group:  rows = method [@ dataset], columns = test group accuracies + unbiased
// per-factor: rows = method [@ dataset], columns = Maj./Min. per factor
Table BuildReportTable(ReportKind kind, std::span<const TrialRecord> trials, const sweep::SelectionPolicy& policy);

// Percentages with `decimals` digits; empty cells render as "-".
std::string RenderText(const Table& table, int decimals = 1);
// Raw fractions at full precision; empty cells are empty fields.
std::string RenderCsv(const Table& table);

}  // namespace biasbench::expcli
