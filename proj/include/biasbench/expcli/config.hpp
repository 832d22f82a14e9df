// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "biasbench/data/bias_spec.hpp"
#include "biasbench/data/dataset.hpp"
#include "biasbench/data/group_task.hpp"
#include "biasbench/expcli/record.hpp"
#include "biasbench/expcli/store.hpp"
#include "biasbench/json_util.hpp"
#include "biasbench/sweep/sweep.hpp"
#include "biasbench/train/train_config.hpp"

namespace biasbench::expcli {

struct DatasetSource {
  enum class Kind { kBiasedMnist, kGroupTask, kPath };
  Kind kind = Kind::kBiasedMnist;
  data::BiasSpec bias = data::BiasSpec::Default();
  data::GroupTaskSpec group;
  std::filesystem::path path;  // a directory written by `generate`
};

// {"kind": "biased_mnist", ...BiasSpec} | {"kind": "group_task", ...} |
// {"path": "<dir>"}
DatasetSource DatasetSourceFromJson(const Json& json, const std::filesystem::path& base_dir = {});

// Identity used in trial ids: kind, generator version and the full spec.
Json DatasetIdentity(const data::Dataset& dataset);
Json DatasetIdentity(const DatasetSource& source);
data::Dataset Materialize(const DatasetSource& source);

struct ReportSection {
  std::vector<double> alphas = {-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
  std::string baseline = "StdM";
};

// Top-level keys: dataset, method, train, sweep, report. Unknown keys are
// rejected at every level.
struct ExperimentConfig {
  DatasetSource dataset;
  train::TrainConfig train;
  sweep::SweepPlan sweep;
  ReportSection report;
};

ExperimentConfig ExperimentConfigFromJson(const Json& json, const std::filesystem::path& base_dir = {});
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);

// Runs trials against a store: cached ids are loaded instead of retrained.
class StoreRunner {
 public:
  StoreRunner(TrialStore& store, const data::Dataset& dataset, bool verbose = false);

  TrialRecord operator()(const train::TrainConfig& config);
  const Json& identity() const { return identity_; }
  int executed() const { return executed_; }
  int cached() const { return cached_; }

 private:
  TrialStore& store_;
  const data::Dataset& dataset_;
  Json identity_;
  bool verbose_;
  std::mutex mu_;
  int executed_ = 0;
  int cached_ = 0;
};

}  // namespace biasbench::expcli
