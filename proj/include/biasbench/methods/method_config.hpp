// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "biasbench/json_util.hpp"

namespace biasbench::methods {

enum class MethodTag { kStdM, kUpWt, kGdro, kRubi, kLnl, kIrm, kLff, kSd };

inline constexpr MethodTag kAllMethods[] = {MethodTag::kStdM, MethodTag::kUpWt, MethodTag::kGdro,
                                            MethodTag::kRubi, MethodTag::kLnl,  MethodTag::kIrm,
                                            MethodTag::kLff,  MethodTag::kSd};

std::string_view MethodName(MethodTag tag);
MethodTag ParseMethodTag(std::string_view name);
// Explicit methods consume bias-factor labels during training.
bool IsExplicit(MethodTag tag);

struct StdMParams {
  friend bool operator==(const StdMParams&, const StdMParams&) = default;
};

struct UpWtParams {
  friend bool operator==(const UpWtParams&, const UpWtParams&) = default;
};

struct GdroParams {
  double eta = 0.01;
  bool balanced_sampling = true;  // otherwise batches follow the train priors
  friend bool operator==(const GdroParams&, const GdroParams&) = default;
};

struct RubiParams {
  int bias_hidden = 64;  // width of the MLP mapping one-hot b_expl to class logits
  friend bool operator==(const RubiParams&, const RubiParams&) = default;
};

struct LnlParams {
  double lambda_grad = -0.1;
  double lambda_ent = 0.1;
  friend bool operator==(const LnlParams&, const LnlParams&) = default;
};

struct IrmParams {
  double lambda = 1.0;
  int envs_per_batch = 16;
  friend bool operator==(const IrmParams&, const IrmParams&) = default;
};

struct LffParams {
  double gamma = 0.7;
  friend bool operator==(const LffParams&, const LffParams&) = default;
};

// One (lambda, gamma) pair, or one per class.
struct SdParams {
  std::vector<double> lambda = {0.1};
  std::vector<double> gamma = {0.1};
  friend bool operator==(const SdParams&, const SdParams&) = default;
};

using MethodParams =
    std::variant<StdMParams, UpWtParams, GdroParams, RubiParams, LnlParams, IrmParams, LffParams, SdParams>;

struct MethodConfig {
  MethodParams params;

  MethodTag tag() const { return static_cast<MethodTag>(params.index()); }
  template <typename P>
  const P& get() const { return std::get<P>(params); }

  static MethodConfig Default(MethodTag tag);
  // Throws ValidationError; `num_classes` bounds per-class SD parameters.
  void Validate(int num_classes = 0) const;

  friend bool operator==(const MethodConfig&, const MethodConfig&) = default;
};

// {"name": "GDRO", "eta": 0.01, ...}; omitted hyperparameters take defaults.
Json ToJson(const MethodConfig& config);
MethodConfig MethodConfigFromJson(const Json& json);

}  // namespace biasbench::methods
