// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "biasbench/json_util.hpp"
#include "biasbench/train/layers.hpp"

namespace biasbench::train {

enum class Architecture { kGridCnn, kMlp };

std::string_view ArchitectureName(Architecture arch);
Architecture ParseArchitecture(std::string_view name);

// grid_cnn: [coord] conv(s2) relu maxpool [coord] conv relu conv(s2) relu
//           conv(s2) relu, global average pool -> features -> linear head.
// mlp:      (linear relu) per hidden width -> features -> linear head.
struct ModelSpec {
  Architecture arch = Architecture::kGridCnn;
  TensorShape input;  // vectors use {dim, 1, 1}
  int num_classes = 10;
  std::vector<int> widths = {8, 16, 32, 32};
  bool coord_channels = false;

  void Validate() const;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

Json ToJson(const ModelSpec& spec);
ModelSpec ModelSpecFromJson(const Json& json);

template <typename T>
class Model {
 public:
  Model(const ModelSpec& spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  int feature_dim() const { return feature_dim_; }

  // x holds `batch` samples (channels x positions); returns logits C x batch.
  const Tensor<T>& Forward(const Tensor<T>& x, int batch);
  const Tensor<T>& features() const { return *features_; }

  // Accumulates gradients. `dfeatures` adds a gradient at the feature layer.
  void Backward(const Tensor<T>& dlogits, const Tensor<T>* dfeatures = nullptr);

  std::vector<ParamRef<T>> Params();
  std::size_t ParameterCount();
  void ZeroGrad();

 private:
  ModelSpec spec_;
  Sequential<T> backbone_;
  std::unique_ptr<Linear<T>> head_;
  int feature_dim_ = 0;
  int batch_ = 0;
  const Tensor<T>* features_ = nullptr;
  Tensor<T> logits_, dfeat_;
};

extern template class Model<float>;
extern template class Model<double>;

}  // namespace biasbench::train
