// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "biasbench/data/dataset.hpp"
#include "biasbench/metrics/groups.hpp"
#include "biasbench/metrics/metrics.hpp"

namespace biasbench::metrics {

inline const std::vector<double>& DefaultAlphaGrid() {
  static const std::vector<double> grid = {-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
  return grid;
}

inline const std::vector<double>& DefaultBetaGrid() {
  static const std::vector<double> grid = {0.0, 0.2, 0.5, 1.0};
  return grid;
}

struct EvalOptions {
  std::vector<double> alphas = DefaultAlphaGrid();
  std::vector<double> betas = DefaultBetaGrid();
};

struct FactorReport {
  std::string name;
  bool is_explicit = false;
  std::optional<MajMin> majmin;  // empty when a side has no samples
  std::string undefined_reason;
};

struct EvalReport {
  std::string split;
  std::vector<std::string> explicit_factors;
  GroupTable groups;
  std::size_t n = 0;
  std::size_t correct = 0;
  std::vector<std::pair<double, double>> acc_alpha;
  std::vector<FactorReport> factors;
  // Tail accuracy keyed by beta; empty when no tail samples exist.
  std::vector<std::pair<double, std::optional<double>>> tail;
  std::optional<std::map<GroupKey, double>> iosm;

  double accuracy() const { return n ? static_cast<double>(correct) / n : 0.0; }
  // Stored value if alpha is on the grid, otherwise computed from the table.
  double AccAt(double alpha) const;
  const FactorReport& Factor(std::string_view name) const;
};

// Groups use the explicit factors; MMD is reported for every factor; tail
// accuracy uses the explicit-factor tuple as local group and y as answer.
EvalReport BuildReport(const data::Dataset& dataset, data::Split split,
                       std::span<const int> predictions,
                       std::span<const std::size_t> explicit_factors,
                       const EvalOptions& options = {});

void AttachIosm(EvalReport& report, const EvalReport& baseline);

Json ToJson(const EvalReport& report);
EvalReport EvalReportFromJson(const Json& json);

inline constexpr int kReportVersion = 1;

// Versioned line-delimited encoding: a header line, then one report per line.
std::string SerializeReports(std::span<const EvalReport> reports);
std::vector<EvalReport> ParseReports(std::string_view text);

}  // namespace biasbench::metrics
