// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>
#include <vector>

#include "biasbench/train/layers.hpp"

namespace biasbench::train {

enum class OptimizerKind { kSgd, kAdam };

std::string_view OptimizerName(OptimizerKind kind);
OptimizerKind ParseOptimizer(std::string_view name);

// Weight decay is L2 regularization added to the gradient. SGD uses momentum
// 0.9; Adam uses beta = (0.9, 0.999), eps = 1e-8.
template <typename T>
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, std::vector<ParamRef<T>> params, double lr, double weight_decay);
  void Step();

 private:
  OptimizerKind kind_;
  std::vector<ParamRef<T>> params_;
  double lr_;
  double wd_;
  long step_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace biasbench::train
