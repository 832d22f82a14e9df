// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "biasbench/data/dataset.hpp"
#include "biasbench/json_util.hpp"
#include "biasbench/methods/method_config.hpp"
#include "biasbench/train/model.hpp"
#include "biasbench/train/optimizer.hpp"

namespace biasbench::train {

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double lr = 1e-3;
  double weight_decay = 0.0;
  int batch_size = 128;
  int epochs = 30;
  std::uint64_t seed = 0;
  methods::MethodConfig method = methods::MethodConfig::Default(methods::MethodTag::kStdM);
  // Factors that define training groups / environments / bias targets.
  std::vector<std::string> explicit_factors;
  // Factors that define evaluation groups; empty means explicit_factors.
  std::vector<std::string> eval_factors;

  std::optional<Architecture> arch;  // default: grid_cnn for images, mlp for vectors
  std::vector<int> widths;           // default per architecture
  bool coord_channels = false;

  double alpha_select = 0.0;
  std::vector<double> alphas = {-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> betas = {0.0, 0.2, 0.5, 1.0};
  std::size_t train_eval_size = 2048;  // fixed train subset for loss tracking

  void Validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline const std::vector<int>& DefaultCnnWidths() {
  static const std::vector<int> w = {8, 16, 32, 32};
  return w;
}

inline const std::vector<int>& DefaultMlpWidths() {
  static const std::vector<int> w = {64, 64};
  return w;
}

ModelSpec ResolveModelSpec(const data::Dataset& dataset, const TrainConfig& config);
std::vector<std::size_t> ResolveFactors(const data::Dataset& dataset, const std::vector<std::string>& names);

// Every field is written, so the encoding is canonical for hashing.
Json ToJson(const TrainConfig& config);
TrainConfig TrainConfigFromJson(const Json& json);

}  // namespace biasbench::train
