// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/train/model.hpp"

#include <cmath>

#include "biasbench/error.hpp"

namespace biasbench::train {

std::string_view ArchitectureName(Architecture arch) {
  return arch == Architecture::kGridCnn ? "grid_cnn" : "mlp";
}

Architecture ParseArchitecture(std::string_view name) {
  if (name == "grid_cnn") return Architecture::kGridCnn;
  if (name == "mlp") return Architecture::kMlp;
  throw ValidationError("unknown architecture '" + std::string(name) + "'");
}

void ModelSpec::Validate() const {
  if (num_classes < 2) throw ValidationError("model needs at least two classes");
  if (input.c <= 0 || input.h <= 0 || input.w <= 0) throw ValidationError("invalid model input shape");
  for (int w : widths) {
    if (w <= 0) throw ValidationError("layer widths must be positive");
  }
  if (arch == Architecture::kGridCnn) {
    if (widths.size() != 4) throw ValidationError("grid_cnn needs exactly four convolution widths");
    if (input.h < 16 || input.w < 16) throw ValidationError("grid_cnn input must be at least 16x16");
  } else {
    if (widths.empty()) throw ValidationError("mlp needs at least one hidden width");
    if (coord_channels) throw ValidationError("coordinate channels apply to grid_cnn only");
  }
}

Json ToJson(const ModelSpec& s) {
  return {{"arch", ArchitectureName(s.arch)},
          {"input", {s.input.c, s.input.h, s.input.w}},
          {"num_classes", s.num_classes},
          {"widths", s.widths},
          {"coord_channels", s.coord_channels}};
}

ModelSpec ModelSpecFromJson(const Json& j) {
  CheckKeys(j, {"arch", "input", "num_classes", "widths", "coord_channels"}, "model");
  ModelSpec s;
  s.arch = ParseArchitecture(j.at("arch").get<std::string>());
  const auto in = j.at("input").get<std::vector<int>>();
  if (in.size() != 3) throw ValidationError("model input must be [c, h, w]");
  s.input = {in[0], in[1], in[2]};
  s.num_classes = j.at("num_classes").get<int>();
  s.widths = j.at("widths").get<std::vector<int>>();
  s.coord_channels = j.at("coord_channels").get<bool>();
  s.Validate();
  return s;
}

template <typename T>
Model<T>::Model(const ModelSpec& spec, std::uint64_t seed) : spec_(spec) {
  spec_.Validate();
  Rng rng(DeriveSeed(seed, 0x6d6f64656cULL));
  TensorShape shape = spec_.input;
  auto add = [&](std::unique_ptr<Layer<T>> layer) {
    shape = layer->output_shape();
    backbone_.Add(std::move(layer));
  };
  if (spec_.arch == Architecture::kGridCnn) {
    const auto& w = spec_.widths;
    if (spec_.coord_channels) add(std::make_unique<CoordChannels<T>>(shape));
    add(std::make_unique<Conv2d<T>>(shape, w[0], 3, 2, 1, rng, "conv1"));
    add(std::make_unique<Relu<T>>(shape));
    add(std::make_unique<MaxPool2<T>>(shape));
    if (spec_.coord_channels) add(std::make_unique<CoordChannels<T>>(shape));
    add(std::make_unique<Conv2d<T>>(shape, w[1], 3, 1, 1, rng, "conv2"));
    add(std::make_unique<Relu<T>>(shape));
    add(std::make_unique<Conv2d<T>>(shape, w[2], 3, 2, 1, rng, "conv3"));
    add(std::make_unique<Relu<T>>(shape));
    add(std::make_unique<Conv2d<T>>(shape, w[3], 3, 2, 1, rng, "conv4"));
    add(std::make_unique<Relu<T>>(shape));
    add(std::make_unique<GlobalAvgPool<T>>(shape));
  } else {
    int in = shape.size();
    for (std::size_t i = 0; i < spec_.widths.size(); ++i) {
      add(std::make_unique<Linear<T>>(in, spec_.widths[i], rng, "fc" + std::to_string(i + 1)));
      add(std::make_unique<Relu<T>>(shape));
      in = spec_.widths[i];
    }
  }
  feature_dim_ = shape.size();
  head_ = std::make_unique<Linear<T>>(feature_dim_, spec_.num_classes, rng, "head", std::sqrt(0.5));
}

template <typename T>
const Tensor<T>& Model<T>::Forward(const Tensor<T>& x, int batch) {
  if (x.rows() != spec_.input.c || x.cols() != static_cast<Eigen::Index>(batch) * spec_.input.spatial()) {
    throw ValidationError("model input has the wrong shape");
  }
  batch_ = batch;
  features_ = &backbone_.Forward(x, batch);
  head_->Forward(*features_, logits_, batch);
  return logits_;
}

template <typename T>
void Model<T>::Backward(const Tensor<T>& dlogits, const Tensor<T>* dfeatures) {
  head_->Backward(*features_, logits_, dlogits, &dfeat_, batch_);
  if (dfeatures) dfeat_ += *dfeatures;
  backbone_.Backward(dfeat_, nullptr, batch_);
}

template <typename T>
std::vector<ParamRef<T>> Model<T>::Params() {
  std::vector<ParamRef<T>> out;
  backbone_.CollectParams(out);
  head_->CollectParams(out);
  return out;
}

template <typename T>
std::size_t Model<T>::ParameterCount() {
  std::size_t n = 0;
  for (const auto& p : Params()) n += static_cast<std::size_t>(p.value->size());
  return n;
}

template <typename T>
void Model<T>::ZeroGrad() {
  for (auto& p : Params()) p.grad->setZero();
}

template class Model<float>;
template class Model<double>;

}  // namespace biasbench::train
