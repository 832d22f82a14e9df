// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "biasbench/data/bias_spec.hpp"
#include "biasbench/data/corpus.hpp"

namespace biasbench::data {

// height x width x 3, row-major HWC, values in [0,1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  float& At(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float At(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

struct CellBox {
  int top = 0;
  int left = 0;
  int size = 0;
};

// Composes 3x3 grid images. Shape and texture masks are precomputed for the
// spec's cell size, so one Renderer should be reused across samples.
//
// Layer order: background color, texture blended at `texture_alpha`, one
// distractor per non-digit cell, digit outline, digit.
class Renderer {
 public:
  explicit Renderer(const BiasSpec& spec);

  // `b` holds one value index per spec factor, in spec order.
  Image Compose(const Glyph& digit, std::span<const int> b) const;
  void ComposeU8(const Glyph& digit, std::span<const int> b, std::span<std::uint8_t> out) const;

  CellBox Cell(int index) const;
  int image_size() const { return size_; }

 private:
  BiasSpec spec_;
  int cell_;
  int size_;
  std::size_t bg_, digit_color_, position_, shape_, shape_color_, texture_, texture_color_;
  std::vector<std::vector<float>> shape_masks_;    // per shape, cell x cell
  std::vector<std::vector<float>> texture_masks_;  // per texture, size x size
};

Image ComposeImage(const Glyph& digit, std::span<const int> b, const BiasSpec& spec);

std::vector<std::uint8_t> Quantize(const Image& image);

}  // namespace biasbench::data
