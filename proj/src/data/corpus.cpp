// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/data/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "biasbench/error.hpp"
#include "biasbench/rng.hpp"

namespace biasbench::data {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
constexpr int kGlyphSide = 28;

struct Point {
  double x;
  double y;
};

using Stroke = std::vector<Point>;

// Elliptical arc in the unit box; angles in degrees, y axis pointing down.
Stroke Arc(double cx, double cy, double rx, double ry, double from, double to, int steps = 14) {
  Stroke s;
  for (int i = 0; i <= steps; ++i) {
    const double a = (from + (to - from) * i / steps) * std::numbers::pi / 180.0;
    s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return s;
}

Stroke Concat(Stroke a, const Stroke& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<Stroke> DigitStrokes(int digit) {
  switch (digit) {
    case 0: return {Arc(0.5, 0.5, 0.19, 0.30, 0, 360, 24)};
    case 1: return {{{0.40, 0.30}, {0.53, 0.19}, {0.50, 0.81}}};
    case 2:
      return {Concat(Arc(0.50, 0.36, 0.18, 0.15, -170, 20), {{0.30, 0.80}, {0.72, 0.80}})};
    case 3: return {Arc(0.48, 0.35, 0.17, 0.15, -150, 90), Arc(0.48, 0.64, 0.20, 0.16, -90, 150)};
    case 4: return {{{0.60, 0.81}, {0.60, 0.19}, {0.28, 0.62}, {0.75, 0.62}}};
    case 5:
      return {Concat({{0.69, 0.20}, {0.38, 0.20}, {0.35, 0.47}}, Arc(0.50, 0.62, 0.19, 0.17, -130, 150))};
    case 6:
      return {{{0.64, 0.19}, {0.48, 0.29}, {0.38, 0.44}, {0.33, 0.63}},
              Arc(0.50, 0.64, 0.17, 0.16, 0, 360, 20)};
    case 7: return {{{0.29, 0.20}, {0.71, 0.20}, {0.44, 0.81}}};
    case 8: return {Arc(0.50, 0.34, 0.15, 0.14, 0, 360, 20), Arc(0.50, 0.65, 0.18, 0.16, 0, 360, 20)};
    case 9:
      return {Arc(0.50, 0.37, 0.16, 0.15, 0, 360, 20), {{0.66, 0.38}, {0.58, 0.81}}};
    default: return {};
  }
}

double SegmentDistance(Point p, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = p.x - (a.x + t * dx);
  const double ey = p.y - (a.y + t * dy);
  return std::sqrt(ex * ex + ey * ey);
}

// Strokes are in pixel coordinates here.
Glyph Rasterize(const std::vector<Stroke>& strokes, double width) {
  Glyph g{kGlyphSide, kGlyphSide, std::vector<float>(kGlyphSide * kGlyphSide, 0.0f)};
  for (int r = 0; r < kGlyphSide; ++r) {
    for (int c = 0; c < kGlyphSide; ++c) {
      const Point p{c + 0.5, r + 0.5};
      double d = 1e9;
      for (const auto& s : strokes) {
        if (s.size() == 1) d = std::min(d, SegmentDistance(p, s[0], s[0]));
        for (std::size_t i = 1; i < s.size(); ++i) d = std::min(d, SegmentDistance(p, s[i - 1], s[i]));
      }
      const double v = std::clamp(width / 2.0 + 0.5 - d, 0.0, 1.0);
      g.pixels[static_cast<std::size_t>(r) * kGlyphSide + c] = static_cast<float>(v);
    }
  }
  return g;
}

struct Affine {
  double a = 1, b = 0, c = 0, d = 1, tx = 0, ty = 0;
  Point Apply(Point p) const { return {a * p.x + b * p.y + tx, c * p.x + d * p.y + ty}; }
};

// Maps unit-box strokes to pixel coordinates through `warp` (about the center).
std::vector<Stroke> Place(std::vector<Stroke> strokes, const Affine& warp) {
  for (auto& s : strokes) {
    for (auto& p : s) {
      const Point centered{(p.x - 0.5) * kGlyphSide, (p.y - 0.5) * kGlyphSide};
      const Point q = warp.Apply(centered);
      p = {q.x + kGlyphSide / 2.0, q.y + kGlyphSide / 2.0};
    }
  }
  return strokes;
}

std::uint32_t ReadBigEndian(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void WriteBigEndian(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

std::size_t DigitCorpus::size() const {
  std::size_t n = 0;
  for (const auto& c : by_class) n += c.size();
  return n;
}

DigitCorpus LoadIdxCorpus(const std::filesystem::path& images, const std::filesystem::path& labels) {
  std::ifstream img(images, std::ios::binary);
  if (!img) throw IngestionError(images.string() + ": cannot open");
  std::ifstream lab(labels, std::ios::binary);
  if (!lab) throw IngestionError(labels.string() + ": cannot open");

  const std::uint32_t img_magic = ReadBigEndian(img);
  if (!img || img_magic != kIdxImageMagic) {
    throw IngestionError(images.string() + ": bad IDX image magic number");
  }
  const std::uint32_t count = ReadBigEndian(img);
  const std::uint32_t rows = ReadBigEndian(img);
  const std::uint32_t cols = ReadBigEndian(img);
  if (!img || rows == 0 || cols == 0 || rows > 4096 || cols > 4096) {
    throw IngestionError(images.string() + ": truncated or invalid header");
  }
  const std::uint32_t lab_magic = ReadBigEndian(lab);
  if (!lab || lab_magic != kIdxLabelMagic) {
    throw IngestionError(labels.string() + ": bad IDX label magic number");
  }
  const std::uint32_t label_count = ReadBigEndian(lab);
  if (!lab) throw IngestionError(labels.string() + ": truncated header");
  if (label_count != count) {
    throw IngestionError(labels.string() + ": label count " + std::to_string(label_count) +
                         " does not match image count " + std::to_string(count));
  }

  std::vector<unsigned char> label_bytes(count);
  lab.read(reinterpret_cast<char*>(label_bytes.data()), count);
  if (static_cast<std::uint32_t>(lab.gcount()) != count) {
    throw IngestionError(labels.string() + ": truncated label data");
  }
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> image_bytes(pixels * count);
  img.read(reinterpret_cast<char*>(image_bytes.data()), static_cast<std::streamsize>(image_bytes.size()));
  if (static_cast<std::size_t>(img.gcount()) != image_bytes.size()) {
    throw IngestionError(images.string() + ": truncated image data");
  }

  DigitCorpus corpus;
  corpus.rows = static_cast<int>(rows);
  corpus.cols = static_cast<int>(cols);
  for (std::uint32_t i = 0; i < count; ++i) {
    if (label_bytes[i] >= kNumDigitClasses) {
      throw IngestionError(labels.string() + ": label out of range at index " + std::to_string(i));
    }
    Glyph g{corpus.rows, corpus.cols, std::vector<float>(pixels)};
    for (std::size_t p = 0; p < pixels; ++p) g.pixels[p] = image_bytes[i * pixels + p] / 255.0f;
    corpus.by_class[label_bytes[i]].push_back(std::move(g));
  }
  return corpus;
}

void WriteIdxCorpus(const DigitCorpus& corpus, const std::filesystem::path& images,
                    const std::filesystem::path& labels) {
  std::ofstream img(images, std::ios::binary);
  std::ofstream lab(labels, std::ios::binary);
  if (!img || !lab) throw IoError("cannot write IDX files");
  const auto count = static_cast<std::uint32_t>(corpus.size());
  WriteBigEndian(img, kIdxImageMagic);
  WriteBigEndian(img, count);
  WriteBigEndian(img, static_cast<std::uint32_t>(corpus.rows));
  WriteBigEndian(img, static_cast<std::uint32_t>(corpus.cols));
  WriteBigEndian(lab, kIdxLabelMagic);
  WriteBigEndian(lab, count);
  std::size_t longest = 0;
  for (const auto& c : corpus.by_class) longest = std::max(longest, c.size());
  for (std::size_t i = 0; i < longest; ++i) {
    for (int k = 0; k < kNumDigitClasses; ++k) {
      if (i >= corpus.by_class[k].size()) continue;
      const auto& g = corpus.by_class[k][i];
      for (float v : g.pixels) {
        img.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f))));
      }
      lab.put(static_cast<char>(k));
    }
  }
}

DigitCorpus BundledFont() {
  DigitCorpus corpus;
  for (int d = 0; d < kNumDigitClasses; ++d) {
    corpus.by_class[d].push_back(Rasterize(Place(DigitStrokes(d), Affine{}), 2.6));
  }
  return corpus;
}

DigitCorpus SyntheticCorpus(int per_class, std::uint64_t seed) {
  if (per_class <= 0) throw ValidationError("synthetic corpus needs per_class > 0");
  DigitCorpus corpus;
  for (int d = 0; d < kNumDigitClasses; ++d) {
    for (int i = 0; i < per_class; ++i) {
      Rng rng(DeriveSeed(seed, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(i)));
      auto strokes = DigitStrokes(d);
      for (auto& s : strokes) {
        for (auto& p : s) {
          p.x += 0.012 * rng.Normal();
          p.y += 0.012 * rng.Normal();
        }
      }
      const double angle = rng.Uniform(-12.0, 12.0) * std::numbers::pi / 180.0;
      const double sx = rng.Uniform(0.85, 1.1);
      const double sy = rng.Uniform(0.85, 1.1);
      const double shear = rng.Uniform(-0.25, 0.25);
      Affine w;
      // rotation * shear * scale
      const double ca = std::cos(angle), sa = std::sin(angle);
      w.a = ca * sx;
      w.b = (ca * shear - sa) * sy;
      w.c = sa * sx;
      w.d = (sa * shear + ca) * sy;
      w.tx = rng.Uniform(-1.5, 1.5);
      w.ty = rng.Uniform(-1.5, 1.5);
      corpus.by_class[d].push_back(Rasterize(Place(strokes, w), rng.Uniform(2.0, 3.4)));
    }
  }
  return corpus;
}

CorpusPair LoadCorpus(const CorpusSource& source, std::uint64_t seed) {
  switch (source.kind) {
    case CorpusSource::Kind::kFont: {
      auto font = BundledFont();
      return {font, font};
    }
    case CorpusSource::Kind::kSynthetic:
      return {SyntheticCorpus(source.per_class, DeriveSeed(seed, 0x676c79, 0)),
              SyntheticCorpus(source.per_class, DeriveSeed(seed, 0x676c79, 1))};
    case CorpusSource::Kind::kIdx: {
      auto train = LoadIdxCorpus(source.train_images, source.train_labels);
      if (source.test_images.empty()) return {train, train};
      return {std::move(train), LoadIdxCorpus(source.test_images, source.test_labels)};
    }
  }
  throw ValidationError("unknown corpus kind");
}

}  // namespace biasbench::data
