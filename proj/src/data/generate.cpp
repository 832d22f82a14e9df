// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/data/generate.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "biasbench/error.hpp"

namespace biasbench::data {

namespace {

Rng SampleStream(const BiasSpec& spec, Split split, std::size_t index) {
  return Rng(DeriveSeed(spec.seed, static_cast<std::uint64_t>(split) + 1, index));
}

const DigitCorpus& CorpusFor(const CorpusPair& corpus, Split split) {
  return split == Split::kTest ? corpus.test : corpus.train;
}

}  // namespace

int SampleFactorValue(int y, const FactorDef& factor, double p_bias, Rng& rng) {
  const int biased = factor.BiasedValue(y);
  if (rng.Uniform() < p_bias) return biased;
  const int other = static_cast<int>(rng.Below(static_cast<std::size_t>(factor.cardinality - 1)));
  return other >= biased ? other + 1 : other;
}

Sample GenerateSample(const BiasSpec& spec, const Renderer& renderer, const DigitCorpus& corpus,
                      Split split, std::size_t index, std::optional<std::size_t> glyph_index) {
  Rng rng = SampleStream(spec, split, index);
  Sample s;
  s.y = static_cast<int>(rng.Below(kNumDigitClasses));
  const auto& glyphs = corpus.by_class[s.y];
  if (glyphs.empty()) {
    throw IngestionError("digit corpus has no glyphs for class " + std::to_string(s.y));
  }
  const std::size_t pick = rng.Below(glyphs.size());
  const std::size_t g = glyph_index.value_or(pick);
  for (std::size_t j = 0; j < spec.factors.size(); ++j) {
    const int v = SampleFactorValue(s.y, spec.factors[j], spec.PBias(split, j), rng);
    s.b.push_back(v);
    s.is_majority.push_back(v == spec.factors[j].BiasedValue(s.y));
  }
  s.image = renderer.Compose(glyphs.at(g), s.b);
  return s;
}

Dataset GenerateDataset(const BiasSpec& spec, const CorpusPair& corpus) {
  spec.Validate();
  Renderer renderer(spec);
  Dataset ds;
  ds.kind = "biased_mnist";
  ds.input = InputKind::kImage;
  ds.num_classes = kNumDigitClasses;
  ds.height = ds.width = spec.image_size();
  ds.channels = 3;
  for (const auto& f : spec.factors) {
    ds.factor_names.push_back(f.name);
    ds.cardinalities.push_back(f.cardinality);
  }
  ds.metadata = {{"generator_version", kGeneratorVersion}, {"seed", spec.seed}, {"spec", ToJson(spec)}};

  const std::size_t image_bytes = static_cast<std::size_t>(ds.height) * ds.width * 3;
  for (auto split : kAllSplits) {
    const std::size_t n = spec.split_sizes.Of(split);
    const auto& glyphs = CorpusFor(corpus, split);
    auto& out = ds.split(split);
    out.labels.resize(n);
    out.factors.resize(n * spec.factors.size());
    out.pixels.resize(n * image_bytes);

    // Without replacement, glyphs are dealt from a seeded per-class permutation
    // in index order; this needs the labels first.
    std::vector<std::optional<std::size_t>> assigned(n);
    if (!spec.corpus.with_replacement) {
      std::array<std::vector<std::size_t>, kNumDigitClasses> decks;
      Rng deck_rng(DeriveSeed(spec.seed, 0xdec4, static_cast<std::uint64_t>(split)));
      for (int k = 0; k < kNumDigitClasses; ++k) {
        decks[k].resize(glyphs.by_class[k].size());
        std::iota(decks[k].begin(), decks[k].end(), std::size_t{0});
        deck_rng.Shuffle(std::span(decks[k]));
      }
      std::array<std::size_t, kNumDigitClasses> used{};
      for (std::size_t i = 0; i < n; ++i) {
        Rng rng = SampleStream(spec, split, i);
        const int y = static_cast<int>(rng.Below(kNumDigitClasses));
        if (used[y] >= decks[y].size()) {
          throw IngestionError("digit corpus has too few glyphs of class " + std::to_string(y) +
                               " for split '" + std::string(SplitName(split)) +
                               "' without replacement");
        }
        assigned[i] = decks[y][used[y]++];
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      const Sample s = GenerateSample(spec, renderer, glyphs, split, i, assigned[i]);
      out.labels[i] = s.y;
      std::copy(s.b.begin(), s.b.end(), out.factors.begin() + static_cast<std::ptrdiff_t>(i * s.b.size()));
      const auto q = Quantize(s.image);
      std::copy(q.begin(), q.end(), out.pixels.begin() + static_cast<std::ptrdiff_t>(i * image_bytes));
    }
  }
  return ds;
}

Dataset GenerateDataset(const BiasSpec& spec) {
  spec.Validate();
  return GenerateDataset(spec, LoadCorpus(spec.corpus, spec.seed));
}

std::size_t Dataset::input_size() const {
  return input == InputKind::kImage ? static_cast<std::size_t>(height) * width * channels
                                    : static_cast<std::size_t>(feature_dim);
}

std::size_t Dataset::FactorIndex(std::string_view name) const {
  for (std::size_t j = 0; j < factor_names.size(); ++j) {
    if (factor_names[j] == name) return j;
  }
  throw ValidationError("dataset has no factor '" + std::string(name) + "'");
}

void Dataset::CopyInput(Split s, std::size_t i, float* dst) const {
  const auto& data = split(s);
  const std::size_t n = input_size();
  if (input == InputKind::kImage) {
    const std::uint8_t* src = data.pixels.data() + i * n;
    for (std::size_t k = 0; k < n; ++k) dst[k] = src[k] * (2.0f / 255.0f) - 1.0f;
  } else {
    std::copy_n(data.features.data() + i * n, n, dst);
  }
}

}  // namespace biasbench::data
