// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "biasbench/data/bias_spec.hpp"
#include "biasbench/json_util.hpp"

namespace biasbench::data {

enum class InputKind { kImage, kVector };

struct SplitData {
  std::vector<std::uint8_t> pixels;  // images: N x H x W x C
  std::vector<float> features;       // vectors: N x D
  std::vector<int> labels;
  std::vector<int> factors;  // N x num_factors

  std::size_t size() const { return labels.size(); }
};

// A fully materialized dataset with train/val/test splits. Every sample
// carries its label and one value per bias factor.
struct Dataset {
  std::string kind;  // "biased_mnist" or "group_task"
  InputKind input = InputKind::kImage;
  int num_classes = 10;
  int height = 0;
  int width = 0;
  int channels = 3;
  int feature_dim = 0;
  std::vector<std::string> factor_names;
  std::vector<int> cardinalities;
  std::array<SplitData, 3> splits;
  Json metadata;  // generator echo (spec, version, seed)

  const SplitData& split(Split s) const { return splits[static_cast<int>(s)]; }
  SplitData& split(Split s) { return splits[static_cast<int>(s)]; }
  std::size_t num_factors() const { return factor_names.size(); }
  std::size_t input_size() const;
  std::size_t FactorIndex(std::string_view name) const;

  int Factor(Split s, std::size_t i, std::size_t j) const {
    return split(s).factors[i * num_factors() + j];
  }
  int BiasedValue(std::size_t j, int y) const { return y % cardinalities[j]; }
  bool IsMajority(Split s, std::size_t i, std::size_t j) const {
    return Factor(s, i, j) == BiasedValue(j, split(s).labels[i]);
  }

  // Writes sample i of split s as floats (images scaled to [-1,1], HWC order).
  void CopyInput(Split s, std::size_t i, float* dst) const;
};

}  // namespace biasbench::data
