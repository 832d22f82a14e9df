// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "biasbench/expcli/record.hpp"
#include "biasbench/sweep/sweep.hpp"

namespace biasbench::expcli {

struct FigureSelector {
  std::vector<std::string> methods;  // empty: all
  std::vector<std::string> ids;      // empty: all; otherwise every id must exist
  std::string dataset;               // label prefix; empty: all
};

struct FigureOptions {
  sweep::SelectionPolicy policy;
  std::vector<double> alphas = {-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
  std::string baseline = "StdM";
};

struct ExportResult {
  std::vector<std::filesystem::path> written;
  std::vector<std::string> missing_ids;
  std::size_t selected = 0;
};

// Applies the selector. Requested ids absent from `trials` land in `missing`.
std::vector<TrialRecord> ApplySelector(std::span<const TrialRecord> trials, const FigureSelector& selector,
                                       std::vector<std::string>* missing);

// Writes CSV and SVG pairs into `out_dir`:
//   mmd_by_factor        majority/minority gap per factor and method
//   explicit_count       unbiased accuracy against number of explicit factors
//   alpha_winners        winners chosen by validation Acc(alpha), their group accuracies
//   acc_vs_alpha         test Acc(alpha) of each method's selected model
//   iosm                 per-group improvement over the baseline method
// Nothing is written when the selection is empty or ids are missing.
ExportResult ExportFigures(std::span<const TrialRecord> trials, const FigureSelector& selector,
                           const FigureOptions& options, const std::filesystem::path& out_dir);

}  // namespace biasbench::expcli
