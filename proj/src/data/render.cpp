// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/data/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "biasbench/error.hpp"
#include "biasbench/rng.hpp"

namespace biasbench::data {

namespace {

struct Vec2 {
  double x;
  double y;
};

bool InsidePolygon(const std::vector<Vec2>& poly, double x, double y) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

std::vector<Vec2> RegularPolygon(int sides, double radius, double phase_deg) {
  std::vector<Vec2> poly;
  for (int i = 0; i < sides; ++i) {
    const double a = (phase_deg + 360.0 * i / sides) * std::numbers::pi / 180.0;
    poly.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return poly;
}

std::vector<Vec2> StarPolygon() {
  std::vector<Vec2> poly;
  for (int i = 0; i < 10; ++i) {
    const double r = i % 2 == 0 ? 0.66 : 0.27;
    const double a = (-90.0 + 36.0 * i) * std::numbers::pi / 180.0;
    poly.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return poly;
}

// (u, v) in [-1, 1]^2, v pointing down.
bool InsideShape(Shape shape, double u, double v) {
  static const auto triangle = std::vector<Vec2>{{0.0, -0.62}, {0.62, 0.5}, {-0.62, 0.5}};
  static const auto pentagon = RegularPolygon(5, 0.62, -90.0);
  static const auto hexagon = RegularPolygon(6, 0.62, 0.0);
  static const auto star = StarPolygon();
  static const auto chevron = std::vector<Vec2>{{-0.62, -0.32}, {0.0, 0.22}, {0.62, -0.32},
                                                {0.62, 0.12},   {0.0, 0.62}, {-0.62, 0.12}};
  const double r = std::hypot(u, v);
  switch (shape) {
    case Shape::kCircle: return r <= 0.6;
    case Shape::kTriangle: return InsidePolygon(triangle, u, v);
    case Shape::kSquare: return std::abs(u) <= 0.5 && std::abs(v) <= 0.5;
    case Shape::kPentagon: return InsidePolygon(pentagon, u, v);
    case Shape::kHexagon: return InsidePolygon(hexagon, u, v);
    case Shape::kStar: return InsidePolygon(star, u, v);
    case Shape::kDiamond: return std::abs(u) / 0.45 + std::abs(v) / 0.65 <= 1.0;
    case Shape::kPlus:
      return (std::abs(u) <= 0.2 && std::abs(v) <= 0.62) || (std::abs(v) <= 0.2 && std::abs(u) <= 0.62);
    case Shape::kRing: return r >= 0.38 && r <= 0.62;
    case Shape::kChevron: return InsidePolygon(chevron, u, v);
  }
  return false;
}

std::vector<float> ShapeMask(Shape shape, int cell) {
  constexpr int kSuper = 4;
  std::vector<float> mask(static_cast<std::size_t>(cell) * cell);
  for (int r = 0; r < cell; ++r) {
    for (int c = 0; c < cell; ++c) {
      int hits = 0;
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const double u = 2.0 * (c + (sx + 0.5) / kSuper) / cell - 1.0;
          const double v = 2.0 * (r + (sy + 0.5) / kSuper) / cell - 1.0;
          hits += InsideShape(shape, u, v) ? 1 : 0;
        }
      }
      mask[static_cast<std::size_t>(r) * cell + c] = static_cast<float>(hits) / (kSuper * kSuper);
    }
  }
  return mask;
}

int PositiveMod(int a, int m) { return ((a % m) + m) % m; }

std::vector<float> TextureMask(Texture texture, int size, int cell) {
  const int period = std::max(4, cell / 4);
  const int half = period / 2;
  std::vector<float> mask(static_cast<std::size_t>(size) * size, 0.0f);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      float m = 0.0f;
      switch (texture) {
        case Texture::kHorizontalStripes: m = PositiveMod(y, period) < half; break;
        case Texture::kVerticalStripes: m = PositiveMod(x, period) < half; break;
        case Texture::kDiagonalStripes: m = PositiveMod(x + y, period) < half; break;
        case Texture::kAntiDiagonalStripes: m = PositiveMod(x - y, period) < half; break;
        case Texture::kDots: {
          const double dx = PositiveMod(x, period) + 0.5 - half;
          const double dy = PositiveMod(y, period) + 0.5 - half;
          m = std::hypot(dx, dy) <= period / 4.0;
          break;
        }
        case Texture::kChecker: m = ((x / period) + (y / period)) % 2 == 0; break;
        case Texture::kGrid: {
          const int width = std::max(1, period / 8);
          m = PositiveMod(x, period) < width || PositiveMod(y, period) < width;
          break;
        }
        case Texture::kWaves: {
          const double shifted = y + half * std::sin(2.0 * std::numbers::pi * x / (2.0 * period));
          m = PositiveMod(static_cast<int>(std::floor(shifted)), period) < half;
          break;
        }
        case Texture::kNoise: {
          const std::uint64_t h = Mix64((static_cast<std::uint64_t>(y) << 32) ^ static_cast<std::uint64_t>(x));
          m = static_cast<float>((h >> 40) & 0xffff) / 65535.0f;
          break;
        }
        case Texture::kBlank: m = 0.0f; break;
      }
      mask[static_cast<std::size_t>(y) * size + x] = m;
    }
  }
  return mask;
}

std::array<float, 3> ToFloat(Rgb c) { return {c.r / 255.0f, c.g / 255.0f, c.b / 255.0f}; }

template <typename T>
const T& BankEntry(const FactorDef& f, int value) {
  return std::get<std::vector<T>>(f.bank)[static_cast<std::size_t>(value)];
}

}  // namespace

Renderer::Renderer(const BiasSpec& spec)
    : spec_(spec),
      cell_(spec.cell_size),
      size_(spec.image_size()),
      bg_(spec.FactorIndex(FactorKind::kBackgroundColor)),
      digit_color_(spec.FactorIndex(FactorKind::kDigitColor)),
      position_(spec.FactorIndex(FactorKind::kDigitPosition)),
      shape_(spec.FactorIndex(FactorKind::kDistractorShape)),
      shape_color_(spec.FactorIndex(FactorKind::kDistractorColor)),
      texture_(spec.FactorIndex(FactorKind::kTextureType)),
      texture_color_(spec.FactorIndex(FactorKind::kTextureColor)) {
  for (int s = 0; s < 10; ++s) shape_masks_.push_back(ShapeMask(static_cast<Shape>(s), cell_));
  for (int t = 0; t < 10; ++t) texture_masks_.push_back(TextureMask(static_cast<Texture>(t), size_, cell_));
}

CellBox Renderer::Cell(int index) const {
  return {(index / kGridSide) * cell_, (index % kGridSide) * cell_, cell_};
}

Image Renderer::Compose(const Glyph& digit, std::span<const int> b) const {
  if (b.size() != spec_.factors.size()) {
    throw ValidationError("factor vector has " + std::to_string(b.size()) + " entries, expected " +
                          std::to_string(spec_.factors.size()));
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b[j] < 0 || b[j] >= spec_.factors[j].cardinality) {
      throw ValidationError("value " + std::to_string(b[j]) + " out of range for factor '" +
                            spec_.factors[j].name + "'");
    }
  }
  if (digit.rows <= 0 || digit.cols <= 0 ||
      digit.pixels.size() != static_cast<std::size_t>(digit.rows) * digit.cols) {
    throw ValidationError("digit glyph has inconsistent dimensions");
  }

  Image img{size_, size_, std::vector<float>(static_cast<std::size_t>(size_) * size_ * 3)};
  const auto background = ToFloat(BankEntry<Rgb>(spec_.factors[bg_], b[bg_]));
  const auto ink = ToFloat(BankEntry<Rgb>(spec_.factors[digit_color_], b[digit_color_]));
  const auto shape_ink = ToFloat(BankEntry<Rgb>(spec_.factors[shape_color_], b[shape_color_]));
  const auto texture_ink = ToFloat(BankEntry<Rgb>(spec_.factors[texture_color_], b[texture_color_]));
  const int digit_cell = BankEntry<int>(spec_.factors[position_], b[position_]);
  const auto shape = BankEntry<Shape>(spec_.factors[shape_], b[shape_]);
  const auto texture = BankEntry<Texture>(spec_.factors[texture_], b[texture_]);

  const auto& tex = texture_masks_[static_cast<int>(texture)];
  const float alpha = static_cast<float>(spec_.texture_alpha);
  for (int y = 0; y < size_; ++y) {
    for (int x = 0; x < size_; ++x) {
      const float m = alpha * tex[static_cast<std::size_t>(y) * size_ + x];
      for (int c = 0; c < 3; ++c) img.At(y, x, c) = background[c] * (1.0f - m) + texture_ink[c] * m;
    }
  }

  const auto& shape_mask = shape_masks_[static_cast<int>(shape)];
  for (int cell = 0; cell < kGridCells; ++cell) {
    if (cell == digit_cell) continue;
    const auto box = Cell(cell);
    for (int r = 0; r < cell_; ++r) {
      for (int c = 0; c < cell_; ++c) {
        const float m = shape_mask[static_cast<std::size_t>(r) * cell_ + c];
        if (m == 0.0f) continue;
        for (int ch = 0; ch < 3; ++ch) {
          float& px = img.At(box.top + r, box.left + c, ch);
          px = px * (1.0f - m) + shape_ink[ch] * m;
        }
      }
    }
  }

  // Digit alpha at cell resolution (bilinear resample of the glyph).
  std::vector<float> ink_alpha(static_cast<std::size_t>(cell_) * cell_);
  for (int r = 0; r < cell_; ++r) {
    const double gy = (r + 0.5) * digit.rows / cell_ - 0.5;
    const int y0 = static_cast<int>(std::floor(gy));
    const double fy = gy - y0;
    for (int c = 0; c < cell_; ++c) {
      const double gx = (c + 0.5) * digit.cols / cell_ - 0.5;
      const int x0 = static_cast<int>(std::floor(gx));
      const double fx = gx - x0;
      auto sample = [&](int yy, int xx) -> double {
        if (yy < 0 || xx < 0 || yy >= digit.rows || xx >= digit.cols) return 0.0;
        return digit.At(yy, xx);
      };
      const double v = (1 - fy) * ((1 - fx) * sample(y0, x0) + fx * sample(y0, x0 + 1)) +
                       fy * ((1 - fx) * sample(y0 + 1, x0) + fx * sample(y0 + 1, x0 + 1));
      ink_alpha[static_cast<std::size_t>(r) * cell_ + c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }

  // Contrasting one-pixel outline keeps the digit visible when its color
  // matches the background.
  const float luminance = 0.299f * ink[0] + 0.587f * ink[1] + 0.114f * ink[2];
  std::array<float, 3> edge_ink{};
  for (int c = 0; c < 3; ++c) edge_ink[c] = luminance > 0.5f ? ink[c] * 0.35f : ink[c] * 0.35f + 0.65f;

  const auto box = Cell(digit_cell);
  for (int r = 0; r < cell_; ++r) {
    for (int c = 0; c < cell_; ++c) {
      float dilated = 0.0f;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= cell_ || cc >= cell_) continue;
          dilated = std::max(dilated, ink_alpha[static_cast<std::size_t>(rr) * cell_ + cc]);
        }
      }
      const float a = ink_alpha[static_cast<std::size_t>(r) * cell_ + c];
      const float edge = std::max(0.0f, dilated - a);
      for (int ch = 0; ch < 3; ++ch) {
        float& px = img.At(box.top + r, box.left + c, ch);
        px = px * (1.0f - edge) + edge_ink[ch] * edge;
        px = px * (1.0f - a) + ink[ch] * a;
      }
    }
  }
  return img;
}

void Renderer::ComposeU8(const Glyph& digit, std::span<const int> b, std::span<std::uint8_t> out) const {
  const Image img = Compose(digit, b);
  if (out.size() != img.data.size()) throw ValidationError("output buffer size mismatch");
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.data[i], 0.0f, 1.0f) * 255.0f));
  }
}

Image ComposeImage(const Glyph& digit, std::span<const int> b, const BiasSpec& spec) {
  return Renderer(spec).Compose(digit, b);
}

std::vector<std::uint8_t> Quantize(const Image& image) {
  std::vector<std::uint8_t> out(image.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image.data[i], 0.0f, 1.0f) * 255.0f));
  }
  return out;
}

}  // namespace biasbench::data
