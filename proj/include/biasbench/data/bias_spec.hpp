// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "biasbench/json_util.hpp"

namespace biasbench::data {

enum class Split { kTrain = 0, kVal = 1, kTest = 2 };
inline constexpr std::array<Split, 3> kAllSplits = {Split::kTrain, Split::kVal, Split::kTest};

std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

enum class FactorKind {
  kBackgroundColor,
  kDigitColor,
  kDigitPosition,
  kDistractorShape,
  kDistractorColor,
  kTextureType,
  kTextureColor,
};

enum class Shape { kCircle, kTriangle, kSquare, kPentagon, kHexagon, kStar, kDiamond, kPlus, kRing, kChevron };

enum class Texture {
  kHorizontalStripes,
  kVerticalStripes,
  kDiagonalStripes,
  kAntiDiagonalStripes,
  kDots,
  kChecker,
  kGrid,
  kWaves,
  kNoise,
  kBlank,
};

// Renderable assets for one factor, indexed by factor value. Positions are
// grid cell indices in row-major order.
using ValueBank =
    std::variant<std::vector<Rgb>, std::vector<Shape>, std::vector<Texture>, std::vector<int>>;

struct FactorDef {
  std::string name;
  FactorKind kind = FactorKind::kBackgroundColor;
  int cardinality = 10;
  ValueBank bank;

  // The class-aligned ("majority") value for label y.
  int BiasedValue(int y) const { return y % cardinality; }
};

inline constexpr int kNumDigitClasses = 10;
inline constexpr int kGridSide = 3;
inline constexpr int kGridCells = kGridSide * kGridSide;

// The shared ten-color palette. Index 0 is purple, 1 green, 2 red.
const std::array<Rgb, 10>& Palette();

std::string_view FactorName(FactorKind kind);
std::optional<FactorKind> ParseFactorKind(std::string_view name);
FactorDef CanonicalFactor(FactorKind kind);
std::vector<FactorDef> CanonicalFactors();

struct SplitSizes {
  std::size_t train = 20000;
  std::size_t val = 5000;
  std::size_t test = 5000;

  std::size_t Of(Split split) const;
};

// Where digit glyphs come from.
struct CorpusSource {
  enum class Kind { kFont, kSynthetic, kIdx };
  Kind kind = Kind::kSynthetic;
  int per_class = 1000;  // synthetic only
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  bool with_replacement = true;
};

struct BiasSpec {
  std::vector<FactorDef> factors = CanonicalFactors();
  std::uint64_t seed = 0;
  SplitSizes split_sizes;
  // p_bias[split][factor], aligned with `factors`.
  std::array<std::vector<double>, 3> p_bias;
  int cell_size = 32;
  double texture_alpha = 0.25;
  CorpusSource corpus;

  // Train and val at 0.7, test unbiased (1/cardinality per factor).
  static BiasSpec Default();

  int image_size() const { return kGridSide * cell_size; }
  double PBias(Split split, std::size_t factor) const {
    return p_bias[static_cast<int>(split)][factor];
  }
  std::size_t FactorIndex(std::string_view name) const;
  std::size_t FactorIndex(FactorKind kind) const;
  void SetPBias(Split split, std::string_view factor, double value);
  void SetAllPBias(Split split, double value);
  // p_bias = 1/cardinality for every factor: no correlation with the label.
  void SetUniformPBias(Split split);

  void Validate() const;
};

Json ToJson(const BiasSpec& spec);
BiasSpec BiasSpecFromJson(const Json& json);

}  // namespace biasbench::data
