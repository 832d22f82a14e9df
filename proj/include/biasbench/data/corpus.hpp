// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "biasbench/data/bias_spec.hpp"

namespace biasbench::data {

// Grayscale bitmap, row-major, intensities in [0,1].
struct Glyph {
  int rows = 0;
  int cols = 0;
  std::vector<float> pixels;

  float At(int r, int c) const { return pixels[static_cast<std::size_t>(r) * cols + c]; }
};

struct DigitCorpus {
  int rows = 28;
  int cols = 28;
  std::array<std::vector<Glyph>, kNumDigitClasses> by_class;

  std::size_t size() const;
};

// Reads an IDX image file (magic 0x803) and label file (magic 0x801).
// Throws IngestionError naming the offending file on malformed input; never
// returns a partial corpus.
DigitCorpus LoadIdxCorpus(const std::filesystem::path& images, const std::filesystem::path& labels);

// Ten stroke-drawn glyphs, one per class. Used as the offline fixture.
DigitCorpus BundledFont();

// `per_class` stroke-drawn glyphs per class with random affine distortion,
// stroke width, and control-point jitter.
DigitCorpus SyntheticCorpus(int per_class, std::uint64_t seed);

// Glyph sources for the train/val splits and for the test split.
struct CorpusPair {
  DigitCorpus train;
  DigitCorpus test;
};

CorpusPair LoadCorpus(const CorpusSource& source, std::uint64_t seed);

// Writes a corpus in IDX format (classes interleaved in index order).
void WriteIdxCorpus(const DigitCorpus& corpus, const std::filesystem::path& images,
                    const std::filesystem::path& labels);

}  // namespace biasbench::data
