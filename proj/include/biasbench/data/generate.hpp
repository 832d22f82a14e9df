// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "biasbench/data/bias_spec.hpp"
#include "biasbench/data/corpus.hpp"
#include "biasbench/data/dataset.hpp"
#include "biasbench/data/render.hpp"
#include "biasbench/rng.hpp"

namespace biasbench::data {

inline constexpr const char* kGeneratorVersion = "1.0.0";

// Returns the class-aligned value with probability p_bias, otherwise one of
// the remaining cardinality-1 values uniformly.
int SampleFactorValue(int y, const FactorDef& factor, double p_bias, Rng& rng);

struct Sample {
  Image image;
  int y = 0;
  std::vector<int> b;
  std::vector<bool> is_majority;
};

// Pure function of (spec, split, index). `glyph_index` overrides the random
// glyph choice (used when sampling without replacement).
Sample GenerateSample(const BiasSpec& spec, const Renderer& renderer, const DigitCorpus& corpus,
                      Split split, std::size_t index,
                      std::optional<std::size_t> glyph_index = std::nullopt);

Dataset GenerateDataset(const BiasSpec& spec, const CorpusPair& corpus);
Dataset GenerateDataset(const BiasSpec& spec);

}  // namespace biasbench::data
