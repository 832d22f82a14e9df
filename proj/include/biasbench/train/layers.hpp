// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

// Layers operate on column-major matrices with one row per channel and one
// column per (sample, y, x) position, so a batch of HWC images is used as-is.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "biasbench/rng.hpp"

namespace biasbench::train {

struct TensorShape {
  int c = 0;
  int h = 1;
  int w = 1;

  int spatial() const { return h * w; }
  int size() const { return c * h * w; }
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

template <typename T>
using Tensor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
};

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string Name() const = 0;
  TensorShape input_shape() const { return in_; }
  TensorShape output_shape() const { return out_; }

  virtual void Forward(const Tensor<T>& x, Tensor<T>& y, int batch) = 0;
  // Accumulates parameter gradients; writes dx unless it is null.
  virtual void Backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx,
                        int batch) = 0;
  virtual void CollectParams(std::vector<ParamRef<T>>& /*out*/) {}

 protected:
  TensorShape in_;
  TensorShape out_;
};

template <typename T>
class Conv2d : public Layer<T> {
 public:
  Conv2d(TensorShape in, int out_channels, int kernel, int stride, int pad, Rng& rng, std::string name);
  std::string Name() const override { return name_; }
  void Forward(const Tensor<T>& x, Tensor<T>& y, int batch) override;
  void Backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx, int batch) override;
  void CollectParams(std::vector<ParamRef<T>>& out) override;

 private:
  std::string name_;
  int k_, stride_, pad_;
  Tensor<T> weight_, bias_, dweight_, dbias_;
  Tensor<T> cols_, dcols_;
};

template <typename T>
class Linear : public Layer<T> {
 public:
  // `gain` scales the He-normal standard deviation.
  Linear(int in, int out, Rng& rng, std::string name, double gain = 1.0);
  std::string Name() const override { return name_; }
  void Forward(const Tensor<T>& x, Tensor<T>& y, int batch) override;
  void Backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx, int batch) override;
  void CollectParams(std::vector<ParamRef<T>>& out) override;
  const Tensor<T>& weight() const { return weight_; }

 private:
  std::string name_;
  Tensor<T> weight_, bias_, dweight_, dbias_;
};

template <typename T>
class Relu : public Layer<T> {
 public:
  explicit Relu(TensorShape in) { this->in_ = this->out_ = in; }
  std::string Name() const override { return "relu"; }
  void Forward(const Tensor<T>& x, Tensor<T>& y, int batch) override;
  void Backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx, int batch) override;
};

// 2x2 max pooling with stride 2 (odd trailing rows/columns dropped).
template <typename T>
class MaxPool2 : public Layer<T> {
 public:
  explicit MaxPool2(TensorShape in);
  std::string Name() const override { return "maxpool"; }
  void Forward(const Tensor<T>& x, Tensor<T>& y, int batch) override;
  void Backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx, int batch) override;

 private:
  std::vector<std::int32_t> argmax_;
};

template <typename T>
class GlobalAvgPool : public Layer<T> {
 public:
  explicit GlobalAvgPool(TensorShape in);
  std::string Name() const override { return "avgpool"; }
  void Forward(const Tensor<T>& x, Tensor<T>& y, int batch) override;
  void Backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx, int batch) override;
};

// Appends two channels holding the x and y coordinate, scaled to [-1, 1].
template <typename T>
class CoordChannels : public Layer<T> {
 public:
  explicit CoordChannels(TensorShape in);
  std::string Name() const override { return "coord"; }
  void Forward(const Tensor<T>& x, Tensor<T>& y, int batch) override;
  void Backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx, int batch) override;
};

// A chain of layers that caches activations for the backward pass. The input
// passed to Forward must outlive the matching Backward call.
template <typename T>
class Sequential {
 public:
  void Add(std::unique_ptr<Layer<T>> layer) { layers_.push_back(std::move(layer)); }
  TensorShape output_shape(TensorShape in) const { return layers_.empty() ? in : layers_.back()->output_shape(); }

  const Tensor<T>& Forward(const Tensor<T>& x, int batch);
  // dx may be null when the input gradient is not needed.
  void Backward(const Tensor<T>& dy, Tensor<T>* dx, int batch);
  void CollectParams(std::vector<ParamRef<T>>& out);
  std::size_t size() const { return layers_.size(); }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  const Tensor<T>* input_ = nullptr;
  std::vector<Tensor<T>> acts_;
  Tensor<T> grad_a_, grad_b_;
};

extern template class Conv2d<float>;
extern template class Conv2d<double>;
extern template class Linear<float>;
extern template class Linear<double>;
extern template class Relu<float>;
extern template class Relu<double>;
extern template class MaxPool2<float>;
extern template class MaxPool2<double>;
extern template class GlobalAvgPool<float>;
extern template class GlobalAvgPool<double>;
extern template class CoordChannels<float>;
extern template class CoordChannels<double>;
extern template class Sequential<float>;
extern template class Sequential<double>;

}  // namespace biasbench::train
