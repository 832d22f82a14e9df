// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/data/group_task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "biasbench/data/generate.hpp"
#include "biasbench/error.hpp"
#include "biasbench/rng.hpp"

namespace biasbench::data {

std::size_t GroupTaskSpec::SizeOf(Split split) const {
  switch (split) {
    case Split::kTrain: return n_train;
    case Split::kVal: return n_val;
    case Split::kTest: return n_test;
  }
  return 0;
}

void GroupTaskSpec::Validate() const {
  if (!(rare_fraction > 0.0 && rare_fraction < 0.5)) {
    throw ValidationError("rare_fraction must lie in (0, 0.5)");
  }
  if (!(correlation >= 0.5 && correlation < 1.0)) {
    throw ValidationError("correlation must lie in [0.5, 1)");
  }
  if (!(rare_fraction < 1.0 - correlation)) {
    throw ValidationError("rare_fraction must be below 1 - correlation");
  }
  if (noise_dims < 0) throw ValidationError("noise_dims must be non-negative");
  for (auto split : kAllSplits) {
    const auto counts = GroupCounts(*this, SizeOf(split));
    if (std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 0; })) {
      throw ValidationError("split '" + std::string(SplitName(split)) + "' with " +
                            std::to_string(SizeOf(split)) + " samples is too small to populate all 4 groups");
    }
  }
}

std::array<double, 4> GroupPriors(const GroupTaskSpec& spec) {
  const double rare = spec.rare_fraction;
  const double corr = spec.correlation;
  // index 2*y + b
  return {corr - 0.5 + rare, 1.0 - corr - rare, rare, 0.5 - rare};
}

std::array<std::size_t, 4> GroupCounts(const GroupTaskSpec& spec, std::size_t n) {
  const auto priors = GroupPriors(spec);
  std::array<std::size_t, 4> counts{};
  std::array<double, 4> remainder{};
  std::size_t assigned = 0;
  for (int g = 0; g < 4; ++g) {
    const double exact = priors[g] * static_cast<double>(n);
    counts[g] = static_cast<std::size_t>(std::floor(exact));
    remainder[g] = exact - std::floor(exact);
    assigned += counts[g];
  }
  std::array<int, 4> order = {0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) counts[order[k % 4]]++;
  return counts;
}

Dataset GenerateGroupTask(const GroupTaskSpec& spec) {
  spec.Validate();
  Dataset ds;
  ds.kind = "group_task";
  ds.input = InputKind::kVector;
  ds.num_classes = 2;
  ds.feature_dim = 2 + spec.noise_dims;
  ds.factor_names = {"bias"};
  ds.cardinalities = {2};
  ds.metadata = {{"generator_version", kGeneratorVersion}, {"seed", spec.seed}, {"spec", ToJson(spec)}};

  const auto dim = static_cast<std::size_t>(ds.feature_dim);
  for (auto split : kAllSplits) {
    const std::size_t n = spec.SizeOf(split);
    const auto counts = GroupCounts(spec, n);
    std::vector<int> groups;
    groups.reserve(n);
    for (int g = 0; g < 4; ++g) groups.insert(groups.end(), counts[g], g);
    Rng order_rng(DeriveSeed(spec.seed, 0x6f72, static_cast<std::uint64_t>(split)));
    order_rng.Shuffle(std::span(groups));

    auto& out = ds.split(split);
    out.labels.resize(n);
    out.factors.resize(n);
    out.features.resize(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
      const int y = groups[i] / 2;
      const int b = groups[i] % 2;
      Rng rng(DeriveSeed(spec.seed, static_cast<std::uint64_t>(split) + 1, i));
      out.labels[i] = y;
      out.factors[i] = b;
      float* x = out.features.data() + i * dim;
      x[0] = static_cast<float>((2 * y - 1) * spec.signal_margin + rng.Normal());
      x[1] = static_cast<float>((2 * b - 1) * spec.bias_margin + rng.Normal());
      for (std::size_t k = 2; k < dim; ++k) x[k] = static_cast<float>(rng.Normal());
    }
  }
  return ds;
}

Json ToJson(const GroupTaskSpec& spec) {
  return {{"rare_fraction", spec.rare_fraction}, {"correlation", spec.correlation},
          {"n_train", spec.n_train},             {"n_val", spec.n_val},
          {"n_test", spec.n_test},               {"seed", spec.seed},
          {"signal_margin", spec.signal_margin}, {"bias_margin", spec.bias_margin},
          {"noise_dims", spec.noise_dims}};
}

GroupTaskSpec GroupTaskSpecFromJson(const Json& j) {
  CheckKeys(j,
            {"rare_fraction", "correlation", "n_train", "n_val", "n_test", "seed", "signal_margin",
             "bias_margin", "noise_dims"},
            "group task");
  GroupTaskSpec s;
  s.rare_fraction = ValueOr(j, "rare_fraction", s.rare_fraction);
  s.correlation = ValueOr(j, "correlation", s.correlation);
  s.n_train = ValueOr(j, "n_train", s.n_train);
  s.n_val = ValueOr(j, "n_val", s.n_val);
  s.n_test = ValueOr(j, "n_test", s.n_test);
  s.seed = ValueOr<std::uint64_t>(j, "seed", s.seed);
  s.signal_margin = ValueOr(j, "signal_margin", s.signal_margin);
  s.bias_margin = ValueOr(j, "bias_margin", s.bias_margin);
  s.noise_dims = ValueOr(j, "noise_dims", s.noise_dims);
  s.Validate();
  return s;
}

}  // namespace biasbench::data
