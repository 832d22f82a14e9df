// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/train/train_config.hpp"

#include <cmath>

#include "biasbench/error.hpp"

namespace biasbench::train {

void TrainConfig::Validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("lr must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ValidationError("weight_decay must be >= 0");
  if (batch_size <= 0) throw ValidationError("batch_size must be positive");
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (!std::isfinite(alpha_select)) throw ValidationError("alpha_select must be finite");
  for (double b : betas) {
    if (!(b >= 0.0)) throw ValidationError("beta grid entries must be >= 0");
  }
  method.Validate();
  const auto tag = method.tag();
  if ((tag == methods::MethodTag::kRubi || tag == methods::MethodTag::kLnl) && explicit_factors.empty()) {
    throw ValidationError(std::string(methods::MethodName(tag)) + " needs at least one explicit factor");
  }
}

ModelSpec ResolveModelSpec(const data::Dataset& ds, const TrainConfig& c) {
  ModelSpec s;
  const bool image = ds.input == data::InputKind::kImage;
  s.arch = c.arch.value_or(image ? Architecture::kGridCnn : Architecture::kMlp);
  if (s.arch == Architecture::kGridCnn && !image) throw ValidationError("grid_cnn needs an image dataset");
  s.input = image ? TensorShape{ds.channels, ds.height, ds.width} : TensorShape{static_cast<int>(ds.input_size()), 1, 1};
  s.num_classes = ds.num_classes;
  s.widths = !c.widths.empty() ? c.widths
             : s.arch == Architecture::kGridCnn ? DefaultCnnWidths()
                                                : DefaultMlpWidths();
  s.coord_channels = c.coord_channels;
  s.Validate();
  return s;
}

std::vector<std::size_t> ResolveFactors(const data::Dataset& ds, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) {
    const auto j = ds.FactorIndex(n);
    if (std::find(out.begin(), out.end(), j) != out.end()) throw ValidationError("factor '" + n + "' listed twice");
    out.push_back(j);
  }
  return out;
}

Json ToJson(const TrainConfig& c) {
  Json j;
  j["optimizer"] = OptimizerName(c.optimizer);
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["method"] = methods::ToJson(c.method);
  j["explicit_factors"] = c.explicit_factors;
  j["eval_factors"] = c.eval_factors;
  j["arch"] = c.arch ? Json(ArchitectureName(*c.arch)) : Json(nullptr);
  j["widths"] = c.widths;
  j["coord_channels"] = c.coord_channels;
  j["alpha_select"] = c.alpha_select;
  j["alphas"] = c.alphas;
  j["betas"] = c.betas;
  j["train_eval_size"] = c.train_eval_size;
  return j;
}

TrainConfig TrainConfigFromJson(const Json& j) {
  CheckKeys(j,
            {"optimizer", "lr", "weight_decay", "batch_size", "epochs", "seed", "method", "explicit_factors",
             "eval_factors", "arch", "widths", "coord_channels", "alpha_select", "alphas", "betas",
             "train_eval_size"},
            "train");
  TrainConfig c;
  if (j.contains("optimizer")) c.optimizer = ParseOptimizer(j.at("optimizer").get<std::string>());
  c.lr = ValueOr(j, "lr", c.lr);
  c.weight_decay = ValueOr(j, "weight_decay", c.weight_decay);
  c.batch_size = ValueOr(j, "batch_size", c.batch_size);
  c.epochs = ValueOr(j, "epochs", c.epochs);
  c.seed = ValueOr(j, "seed", c.seed);
  if (j.contains("method")) c.method = methods::MethodConfigFromJson(j.at("method"));
  c.explicit_factors = ValueOr(j, "explicit_factors", c.explicit_factors);
  c.eval_factors = ValueOr(j, "eval_factors", c.eval_factors);
  if (j.contains("arch") && !j.at("arch").is_null()) c.arch = ParseArchitecture(j.at("arch").get<std::string>());
  c.widths = ValueOr(j, "widths", c.widths);
  c.coord_channels = ValueOr(j, "coord_channels", c.coord_channels);
  c.alpha_select = ValueOr(j, "alpha_select", c.alpha_select);
  c.alphas = ValueOr(j, "alphas", c.alphas);
  c.betas = ValueOr(j, "betas", c.betas);
  c.train_eval_size = ValueOr(j, "train_eval_size", c.train_eval_size);
  c.Validate();
  return c;
}

}  // namespace biasbench::train
