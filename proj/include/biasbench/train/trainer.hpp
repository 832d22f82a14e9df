// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "biasbench/data/dataset.hpp"
#include "biasbench/metrics/report.hpp"
#include "biasbench/train/model.hpp"
#include "biasbench/train/train_config.hpp"

namespace biasbench::train {

enum class TrialStatus { kOk, kDiverged, kAborted };

std::string_view TrialStatusName(TrialStatus status);
TrialStatus ParseTrialStatus(std::string_view name);

struct EpochLog {
  int epoch = 0;                 // 0 is the untrained model
  std::optional<double> train_loss;  // mean training objective over the epoch's batches
  double train_eval_loss = 0.0;  // mean CE of the inference branch on a fixed train subset
  std::vector<std::pair<double, double>> val_acc_alpha;

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

Json ToJson(const EpochLog& log);
EpochLog EpochLogFromJson(const Json& json);

struct NamedTensor {
  std::string name;
  Tensor<float> value;
};

struct TrainResult {
  TrialStatus status = TrialStatus::kOk;
  std::string diagnostic;
  ModelSpec model;
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
  std::optional<metrics::EvalReport> final_val, final_test, best_val, best_test;
  std::vector<NamedTensor> final_params, best_params;  // inference branch
};

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
};

// Predicted class per sample of `split`.
std::vector<int> Predict(Model<float>& model, const data::Dataset& dataset, data::Split split);

metrics::EvalReport Evaluate(Model<float>& model, const data::Dataset& dataset, data::Split split,
                             std::span<const std::size_t> group_factors, const metrics::EvalOptions& options);

// Runs one trial. Non-finite losses end the trial with status kDiverged
// instead of throwing; configuration errors still throw.
TrainResult Train(const data::Dataset& dataset, const TrainConfig& config, const TrainHooks& hooks = {});

// Copies `batch` samples into the channels x positions layout.
void FillBatch(const data::Dataset& dataset, data::Split split, std::span<const std::size_t> indices,
               Tensor<float>& out);

std::vector<NamedTensor> SnapshotParams(Model<float>& model);
void RestoreParams(Model<float>& model, const std::vector<NamedTensor>& params);

}  // namespace biasbench::train
