// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/methods/method_config.hpp"

#include <cmath>

#include "biasbench/error.hpp"

namespace biasbench::methods {

namespace {

constexpr std::string_view kNames[] = {"StdM", "UpWt", "GDRO", "RUBi", "LNL", "IRMv1", "LFF", "SD"};

template <std::size_t I>
MethodParams DefaultAt() {
  return MethodParams(std::in_place_index<I>);
}

void RequireFinite(double v, const char* name) {
  if (!std::isfinite(v)) throw ValidationError(std::string(name) + " must be finite");
}

}  // namespace

std::string_view MethodName(MethodTag tag) { return kNames[static_cast<int>(tag)]; }

MethodTag ParseMethodTag(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kNames); ++i) {
    if (kNames[i] == name) return static_cast<MethodTag>(i);
  }
  throw ValidationError("unknown method '" + std::string(name) + "'");
}

bool IsExplicit(MethodTag tag) {
  switch (tag) {
    case MethodTag::kUpWt:
    case MethodTag::kGdro:
    case MethodTag::kRubi:
    case MethodTag::kLnl:
    case MethodTag::kIrm: return true;
    default: return false;
  }
}

MethodConfig MethodConfig::Default(MethodTag tag) {
  switch (tag) {
    case MethodTag::kStdM: return {DefaultAt<0>()};
    case MethodTag::kUpWt: return {DefaultAt<1>()};
    case MethodTag::kGdro: return {DefaultAt<2>()};
    case MethodTag::kRubi: return {DefaultAt<3>()};
    case MethodTag::kLnl: return {DefaultAt<4>()};
    case MethodTag::kIrm: return {DefaultAt<5>()};
    case MethodTag::kLff: return {DefaultAt<6>()};
    case MethodTag::kSd: return {DefaultAt<7>()};
  }
  throw ValidationError("bad method tag");
}

void MethodConfig::Validate(int num_classes) const {
  switch (tag()) {
    case MethodTag::kGdro: {
      const auto& p = get<GdroParams>();
      RequireFinite(p.eta, "GDRO eta");
      if (p.eta < 0) throw ValidationError("GDRO eta must be >= 0");
      break;
    }
    case MethodTag::kRubi:
      if (get<RubiParams>().bias_hidden <= 0) throw ValidationError("RUBi bias_hidden must be positive");
      break;
    case MethodTag::kLnl: {
      const auto& p = get<LnlParams>();
      RequireFinite(p.lambda_grad, "LNL lambda_grad");
      RequireFinite(p.lambda_ent, "LNL lambda_ent");
      if (p.lambda_grad > 0) throw ValidationError("LNL lambda_grad must be <= 0 (gradient reversal)");
      if (p.lambda_ent < 0) throw ValidationError("LNL lambda_ent must be >= 0");
      break;
    }
    case MethodTag::kIrm: {
      const auto& p = get<IrmParams>();
      RequireFinite(p.lambda, "IRMv1 lambda");
      if (p.lambda < 0) throw ValidationError("IRMv1 lambda must be >= 0");
      if (p.envs_per_batch < 1) throw ValidationError("IRMv1 envs_per_batch must be >= 1");
      break;
    }
    case MethodTag::kLff: {
      const double g = get<LffParams>().gamma;
      if (!(g > 0.0 && g <= 1.0)) throw ValidationError("LFF gamma must lie in (0, 1]");
      break;
    }
    case MethodTag::kSd: {
      const auto& p = get<SdParams>();
      if (p.lambda.empty() || p.gamma.empty()) throw ValidationError("SD lambda and gamma must be non-empty");
      if (p.lambda.size() != p.gamma.size() && p.lambda.size() != 1 && p.gamma.size() != 1) {
        throw ValidationError("SD lambda and gamma lengths disagree");
      }
      for (double l : p.lambda) {
        RequireFinite(l, "SD lambda");
        if (l < 0) throw ValidationError("SD lambda must be >= 0");
      }
      for (double g : p.gamma) RequireFinite(g, "SD gamma");
      const std::size_t n = std::max(p.lambda.size(), p.gamma.size());
      if (n > 1 && num_classes > 0 && n != static_cast<std::size_t>(num_classes)) {
        throw ValidationError("per-class SD parameters need one entry per class");
      }
      break;
    }
    default: break;
  }
}

Json ToJson(const MethodConfig& c) {
  Json j = {{"name", MethodName(c.tag())}};
  switch (c.tag()) {
    case MethodTag::kGdro:
      j["eta"] = c.get<GdroParams>().eta;
      j["balanced_sampling"] = c.get<GdroParams>().balanced_sampling;
      break;
    case MethodTag::kRubi: j["bias_hidden"] = c.get<RubiParams>().bias_hidden; break;
    case MethodTag::kLnl:
      j["lambda_grad"] = c.get<LnlParams>().lambda_grad;
      j["lambda_ent"] = c.get<LnlParams>().lambda_ent;
      break;
    case MethodTag::kIrm:
      j["lambda"] = c.get<IrmParams>().lambda;
      j["envs_per_batch"] = c.get<IrmParams>().envs_per_batch;
      break;
    case MethodTag::kLff: j["gamma"] = c.get<LffParams>().gamma; break;
    case MethodTag::kSd:
      j["lambda"] = c.get<SdParams>().lambda;
      j["gamma"] = c.get<SdParams>().gamma;
      break;
    default: break;
  }
  return j;
}

namespace {

std::vector<double> ScalarOrList(const Json& j, const char* key, std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (v.is_array()) return ValueOr<std::vector<double>>(j, key, fallback);
  ThrowBadType(key, "expected number or list of numbers");
}

}  // namespace

MethodConfig MethodConfigFromJson(const Json& j) {
  if (j.is_string()) return MethodConfig::Default(ParseMethodTag(j.get<std::string>()));
  if (!j.is_object() || !j.contains("name")) throw ValidationError("method section needs a 'name'");
  auto c = MethodConfig::Default(ParseMethodTag(j.at("name").get<std::string>()));
  switch (c.tag()) {
    case MethodTag::kGdro: {
      CheckKeys(j, {"name", "eta", "balanced_sampling"}, "GDRO");
      auto& p = std::get<GdroParams>(c.params);
      p.eta = ValueOr(j, "eta", p.eta);
      p.balanced_sampling = ValueOr(j, "balanced_sampling", p.balanced_sampling);
      break;
    }
    case MethodTag::kRubi: {
      CheckKeys(j, {"name", "bias_hidden"}, "RUBi");
      auto& p = std::get<RubiParams>(c.params);
      p.bias_hidden = ValueOr(j, "bias_hidden", p.bias_hidden);
      break;
    }
    case MethodTag::kLnl: {
      CheckKeys(j, {"name", "lambda_grad", "lambda_ent"}, "LNL");
      auto& p = std::get<LnlParams>(c.params);
      p.lambda_grad = ValueOr(j, "lambda_grad", p.lambda_grad);
      p.lambda_ent = ValueOr(j, "lambda_ent", p.lambda_ent);
      break;
    }
    case MethodTag::kIrm: {
      CheckKeys(j, {"name", "lambda", "envs_per_batch"}, "IRMv1");
      auto& p = std::get<IrmParams>(c.params);
      p.lambda = ValueOr(j, "lambda", p.lambda);
      p.envs_per_batch = ValueOr(j, "envs_per_batch", p.envs_per_batch);
      break;
    }
    case MethodTag::kLff: {
      CheckKeys(j, {"name", "gamma"}, "LFF");
      auto& p = std::get<LffParams>(c.params);
      p.gamma = ValueOr(j, "gamma", p.gamma);
      break;
    }
    case MethodTag::kSd: {
      CheckKeys(j, {"name", "lambda", "gamma"}, "SD");
      auto& p = std::get<SdParams>(c.params);
      p.lambda = ScalarOrList(j, "lambda", p.lambda);
      p.gamma = ScalarOrList(j, "gamma", p.gamma);
      break;
    }
    default: CheckKeys(j, {"name"}, std::string(MethodName(c.tag()))); break;
  }
  c.Validate();
  return c;
}

}  // namespace biasbench::methods
