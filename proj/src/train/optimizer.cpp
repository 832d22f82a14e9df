// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/train/optimizer.hpp"

#include <cmath>

#include "biasbench/error.hpp"

namespace biasbench::train {

namespace {
constexpr double kMomentum = 0.9;
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;
}  // namespace

std::string_view OptimizerName(OptimizerKind kind) { return kind == OptimizerKind::kSgd ? "sgd" : "adam"; }

OptimizerKind ParseOptimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ValidationError("unknown optimizer '" + std::string(name) + "'");
}

template <typename T>
Optimizer<T>::Optimizer(OptimizerKind kind, std::vector<ParamRef<T>> params, double lr, double weight_decay)
    : kind_(kind), params_(std::move(params)), lr_(lr), wd_(weight_decay) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("learning rate must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ValidationError("weight decay must be >= 0");
  for (const auto& p : params_) {
    m_.push_back(Tensor<T>::Zero(p.value->rows(), p.value->cols()));
    if (kind_ == OptimizerKind::kAdam) v_.push_back(Tensor<T>::Zero(p.value->rows(), p.value->cols()));
  }
}

template <typename T>
void Optimizer<T>::Step() {
  ++step_;
  const T wd = static_cast<T>(wd_);
  if (kind_ == OptimizerKind::kSgd) {
    const T mu = static_cast<T>(kMomentum);
    const T lr = static_cast<T>(lr_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& w = *params_[i].value;
      m_[i] = mu * m_[i] + (*params_[i].grad + wd * w);
      w -= lr * m_[i];
    }
    return;
  }
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));
  const T step_size = static_cast<T>(lr_ / bc1);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T b1 = static_cast<T>(kBeta1);
  const T b2 = static_cast<T>(kBeta2);
  const T eps = static_cast<T>(kEps);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& w = *params_[i].value;
    const Tensor<T> g = *params_[i].grad + wd * w;
    m_[i] = b1 * m_[i] + (T(1) - b1) * g;
    v_[i] = b2 * v_[i] + (T(1) - b2) * g.cwiseProduct(g);
    w.array() -= step_size * m_[i].array() / ((v_[i].array().sqrt() * inv_sqrt_bc2) + eps);
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace biasbench::train
