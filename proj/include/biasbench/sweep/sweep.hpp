// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biasbench/expcli/record.hpp"
#include "biasbench/json_util.hpp"
#include "biasbench/methods/method_config.hpp"
#include "biasbench/train/train_config.hpp"

namespace biasbench::sweep {

enum class CheckpointChoice { kFinal, kBest };

struct SelectionPolicy {
  double alpha = 0.0;
  CheckpointChoice checkpoint = CheckpointChoice::kFinal;
};

// Two-stage grid: lr x weight decay with the method's default
// hyperparameters, then the method grid at the stage-1 winner's (lr, wd).
struct SweepPlan {
  train::TrainConfig base;
  std::vector<double> lrs = {1e-3, 1e-4, 1e-5};
  std::vector<double> wds = {0.0, 0.1, 1e-3, 1e-5};
  std::optional<std::vector<methods::MethodConfig>> stage2;  // unset: DefaultStage2Grid
  std::vector<std::uint64_t> seeds = {0};
  SelectionPolicy policy;
  int parallelism = 1;

  void Validate() const;
};

std::vector<methods::MethodConfig> DefaultStage2Grid(methods::MethodTag tag);

std::vector<train::TrainConfig> Stage1Configs(const SweepPlan& plan);
std::vector<train::TrainConfig> Stage2Configs(const SweepPlan& plan, double lr, double weight_decay);

using TrialRunner = std::function<expcli::TrialRecord(const train::TrainConfig&)>;

// Runs `configs` on a bounded worker pool; results keep input order.
std::vector<expcli::TrialRecord> RunTrials(const std::vector<train::TrainConfig>& configs,
                                           const TrialRunner& runner, int parallelism);

// Stage-1 records followed by stage-2 records. Throws if every stage-1 trial
// diverged.
std::vector<expcli::TrialRecord> RunSweep(const SweepPlan& plan, const TrialRunner& runner);

const metrics::EvalReport* ValReport(const expcli::TrialRecord& record, CheckpointChoice checkpoint);
const metrics::EvalReport* TestReport(const expcli::TrialRecord& record, CheckpointChoice checkpoint);

// Argmax of validation Acc(alpha) over successful trials; ties go to lower lr,
// then higher weight decay, then lower seed, then lower id.
const expcli::TrialRecord& SelectModel(std::span<const expcli::TrialRecord> trials, const SelectionPolicy& policy);

struct SensitivityRow {
  double alpha = 0.0;
  std::string winner_id;
  double val_score = 0.0;
  double test_unbiased = 0.0;
  std::map<metrics::GroupKey, double> group_accuracy;
};

struct GroupSpread {
  metrics::GroupKey key;
  std::size_t test_count = 0;
  double min = 0.0;
  double max = 0.0;
  double range() const { return max - min; }
};

struct Sensitivity {
  std::vector<SensitivityRow> rows;
  std::vector<GroupSpread> groups;
  // The rarest and the most populated test group (ties: first key).
  metrics::GroupKey minority;
  metrics::GroupKey majority;
  double minority_range = 0.0;
  double majority_range = 0.0;
  // Range of the mean accuracy over every group except the minority.
  double rest_range = 0.0;
};

Sensitivity SelectionSensitivity(std::span<const expcli::TrialRecord> trials, std::span<const double> alphas,
                                 CheckpointChoice checkpoint = CheckpointChoice::kFinal);

Json ToJson(const SweepPlan& plan);
// `base` supplies the train section; keys here override the grid.
SweepPlan SweepPlanFromJson(const Json& json, const train::TrainConfig& base);

}  // namespace biasbench::sweep
