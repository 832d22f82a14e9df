// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/train/layers.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "biasbench/error.hpp"

namespace biasbench::train {

namespace {

template <typename T>
void HeNormal(Tensor<T>& w, int fan_in, double gain, Rng& rng) {
  const double sd = gain * std::sqrt(2.0 / fan_in);
  // Fill in row-major order so the draw sequence is independent of storage.
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<T>(sd * rng.Normal());
  }
}

}  // namespace

template <typename T>
Conv2d<T>::Conv2d(TensorShape in, int out_channels, int kernel, int stride, int pad, Rng& rng, std::string name)
    : name_(std::move(name)), k_(kernel), stride_(stride), pad_(pad) {
  if (in.c <= 0 || out_channels <= 0 || kernel <= 0 || stride <= 0 || pad < 0) {
    throw ValidationError("invalid convolution dimensions");
  }
  const int ho = (in.h + 2 * pad - kernel) / stride + 1;
  const int wo = (in.w + 2 * pad - kernel) / stride + 1;
  if (ho <= 0 || wo <= 0) throw ValidationError("convolution input too small for " + name_);
  this->in_ = in;
  this->out_ = {out_channels, ho, wo};
  const int fan_in = kernel * kernel * in.c;
  weight_.resize(out_channels, fan_in);
  HeNormal(weight_, fan_in, 1.0, rng);
  bias_ = Tensor<T>::Zero(out_channels, 1);
  dweight_ = Tensor<T>::Zero(out_channels, fan_in);
  dbias_ = Tensor<T>::Zero(out_channels, 1);
}

template <typename T>
void Conv2d<T>::Forward(const Tensor<T>& x, Tensor<T>& y, int batch) {
  const auto [cin, h, w] = this->in_;
  const int ho = this->out_.h;
  const int wo = this->out_.w;
  const Eigen::Index rows = static_cast<Eigen::Index>(k_) * k_ * cin;
  cols_.resize(rows, static_cast<Eigen::Index>(batch) * ho * wo);
  const T* src = x.data();
  T* dst = cols_.data();
  for (int b = 0; b < batch; ++b) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        for (int ky = 0; ky < k_; ++ky) {
          const int iy = oy * stride_ - pad_ + ky;
          for (int kx = 0; kx < k_; ++kx) {
            const int ix = ox * stride_ - pad_ + kx;
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
              std::memset(dst, 0, sizeof(T) * cin);
            } else {
              std::memcpy(dst, src + ((static_cast<std::size_t>(b) * h + iy) * w + ix) * cin, sizeof(T) * cin);
            }
            dst += cin;
          }
        }
      }
    }
  }
  y.resize(this->out_.c, cols_.cols());
  y.noalias() = weight_ * cols_;
  y.colwise() += bias_.col(0);
}

template <typename T>
void Conv2d<T>::Backward(const Tensor<T>& /*x*/, const Tensor<T>& /*y*/, const Tensor<T>& dy, Tensor<T>* dx,
                         int batch) {
  dweight_.noalias() += dy * cols_.transpose();
  dbias_ += dy.rowwise().sum();
  if (!dx) return;
  const auto [cin, h, w] = this->in_;
  const int ho = this->out_.h;
  const int wo = this->out_.w;
  dcols_.resize(cols_.rows(), cols_.cols());
  dcols_.noalias() = weight_.transpose() * dy;
  dx->setZero(cin, static_cast<Eigen::Index>(batch) * h * w);
  const T* src = dcols_.data();
  T* out = dx->data();
  for (int b = 0; b < batch; ++b) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        for (int ky = 0; ky < k_; ++ky) {
          const int iy = oy * stride_ - pad_ + ky;
          for (int kx = 0; kx < k_; ++kx) {
            const int ix = ox * stride_ - pad_ + kx;
            if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
              T* d = out + ((static_cast<std::size_t>(b) * h + iy) * w + ix) * cin;
              for (int c = 0; c < cin; ++c) d[c] += src[c];
            }
            src += cin;
          }
        }
      }
    }
  }
}

template <typename T>
void Conv2d<T>::CollectParams(std::vector<ParamRef<T>>& out) {
  out.push_back({name_ + ".weight", &weight_, &dweight_});
  out.push_back({name_ + ".bias", &bias_, &dbias_});
}

template <typename T>
Linear<T>::Linear(int in, int out, Rng& rng, std::string name, double gain) : name_(std::move(name)) {
  if (in <= 0 || out <= 0) throw ValidationError("invalid linear layer dimensions");
  this->in_ = {in, 1, 1};
  this->out_ = {out, 1, 1};
  weight_.resize(out, in);
  HeNormal(weight_, in, gain, rng);
  bias_ = Tensor<T>::Zero(out, 1);
  dweight_ = Tensor<T>::Zero(out, in);
  dbias_ = Tensor<T>::Zero(out, 1);
}

template <typename T>
void Linear<T>::Forward(const Tensor<T>& x, Tensor<T>& y, int /*batch*/) {
  y.resize(weight_.rows(), x.cols());
  y.noalias() = weight_ * x;
  y.colwise() += bias_.col(0);
}

template <typename T>
void Linear<T>::Backward(const Tensor<T>& x, const Tensor<T>& /*y*/, const Tensor<T>& dy, Tensor<T>* dx,
                         int /*batch*/) {
  dweight_.noalias() += dy * x.transpose();
  dbias_ += dy.rowwise().sum();
  if (dx) {
    dx->resize(weight_.cols(), dy.cols());
    dx->noalias() = weight_.transpose() * dy;
  }
}

template <typename T>
void Linear<T>::CollectParams(std::vector<ParamRef<T>>& out) {
  out.push_back({name_ + ".weight", &weight_, &dweight_});
  out.push_back({name_ + ".bias", &bias_, &dbias_});
}

template <typename T>
void Relu<T>::Forward(const Tensor<T>& x, Tensor<T>& y, int /*batch*/) {
  y = x.cwiseMax(T(0));
}

template <typename T>
void Relu<T>::Backward(const Tensor<T>& /*x*/, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx,
                       int /*batch*/) {
  if (dx) *dx = (y.array() > T(0)).select(dy, T(0));
}

template <typename T>
MaxPool2<T>::MaxPool2(TensorShape in) {
  if (in.h < 2 || in.w < 2) throw ValidationError("max pool input too small");
  this->in_ = in;
  this->out_ = {in.c, in.h / 2, in.w / 2};
}

template <typename T>
void MaxPool2<T>::Forward(const Tensor<T>& x, Tensor<T>& y, int batch) {
  const auto [c, h, w] = this->in_;
  const int ho = this->out_.h;
  const int wo = this->out_.w;
  y.resize(c, static_cast<Eigen::Index>(batch) * ho * wo);
  argmax_.resize(static_cast<std::size_t>(y.size()));
  const T* src = x.data();
  T* dst = y.data();
  std::int32_t* arg = argmax_.data();
  for (int b = 0; b < batch; ++b) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        const std::size_t p00 = ((static_cast<std::size_t>(b) * h + 2 * oy) * w + 2 * ox) * c;
        const std::size_t offsets[4] = {p00, p00 + c, p00 + static_cast<std::size_t>(w) * c,
                                        p00 + static_cast<std::size_t>(w + 1) * c};
        for (int ch = 0; ch < c; ++ch) {
          std::size_t best = offsets[0] + ch;
          for (int k = 1; k < 4; ++k) {
            if (src[offsets[k] + ch] > src[best]) best = offsets[k] + ch;
          }
          *dst++ = src[best];
          *arg++ = static_cast<std::int32_t>(best);
        }
      }
    }
  }
}

template <typename T>
void MaxPool2<T>::Backward(const Tensor<T>& x, const Tensor<T>& /*y*/, const Tensor<T>& dy, Tensor<T>* dx,
                           int /*batch*/) {
  if (!dx) return;
  dx->setZero(x.rows(), x.cols());
  T* out = dx->data();
  const T* g = dy.data();
  for (std::size_t i = 0; i < argmax_.size(); ++i) out[argmax_[i]] += g[i];
}

template <typename T>
GlobalAvgPool<T>::GlobalAvgPool(TensorShape in) {
  this->in_ = in;
  this->out_ = {in.c, 1, 1};
}

template <typename T>
void GlobalAvgPool<T>::Forward(const Tensor<T>& x, Tensor<T>& y, int batch) {
  const Eigen::Index s = this->in_.spatial();
  y.resize(this->in_.c, batch);
  for (int b = 0; b < batch; ++b) y.col(b) = x.middleCols(b * s, s).rowwise().mean();
}

template <typename T>
void GlobalAvgPool<T>::Backward(const Tensor<T>& x, const Tensor<T>& /*y*/, const Tensor<T>& dy, Tensor<T>* dx,
                                int batch) {
  if (!dx) return;
  const Eigen::Index s = this->in_.spatial();
  dx->resize(x.rows(), x.cols());
  const T scale = T(1) / static_cast<T>(s);
  for (int b = 0; b < batch; ++b) dx->middleCols(b * s, s).colwise() = dy.col(b) * scale;
}

template <typename T>
CoordChannels<T>::CoordChannels(TensorShape in) {
  this->in_ = in;
  this->out_ = {in.c + 2, in.h, in.w};
}

template <typename T>
void CoordChannels<T>::Forward(const Tensor<T>& x, Tensor<T>& y, int batch) {
  const auto [c, h, w] = this->in_;
  y.resize(c + 2, x.cols());
  y.topRows(c) = x;
  for (int b = 0; b < batch; ++b) {
    for (int iy = 0; iy < h; ++iy) {
      for (int ix = 0; ix < w; ++ix) {
        const Eigen::Index col = (static_cast<Eigen::Index>(b) * h + iy) * w + ix;
        y(c, col) = w > 1 ? static_cast<T>(2.0 * ix / (w - 1) - 1.0) : T(0);
        y(c + 1, col) = h > 1 ? static_cast<T>(2.0 * iy / (h - 1) - 1.0) : T(0);
      }
    }
  }
}

template <typename T>
void CoordChannels<T>::Backward(const Tensor<T>& /*x*/, const Tensor<T>& /*y*/, const Tensor<T>& dy,
                                Tensor<T>* dx, int /*batch*/) {
  if (dx) *dx = dy.topRows(this->in_.c);
}

template <typename T>
const Tensor<T>& Sequential<T>::Forward(const Tensor<T>& x, int batch) {
  input_ = &x;
  acts_.resize(layers_.size());
  const Tensor<T>* cur = &x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->Forward(*cur, acts_[i], batch);
    cur = &acts_[i];
  }
  return *cur;
}

template <typename T>
void Sequential<T>::Backward(const Tensor<T>& dy, Tensor<T>* dx, int batch) {
  if (layers_.empty()) {
    if (dx) *dx = dy;
    return;
  }
  const Tensor<T>* g = &dy;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const Tensor<T>& in = i == 0 ? *input_ : acts_[i - 1];
    Tensor<T>* out = i == 0 ? dx : (g == &grad_a_ ? &grad_b_ : &grad_a_);
    layers_[i]->Backward(in, acts_[i], *g, out, batch);
    g = out;
  }
}

template <typename T>
void Sequential<T>::CollectParams(std::vector<ParamRef<T>>& out) {
  for (auto& l : layers_) l->CollectParams(out);
}

template class Conv2d<float>;
template class Conv2d<double>;
template class Linear<float>;
template class Linear<double>;
template class Relu<float>;
template class Relu<double>;
template class MaxPool2<float>;
template class MaxPool2<double>;
template class GlobalAvgPool<float>;
template class GlobalAvgPool<double>;
template class CoordChannels<float>;
template class CoordChannels<double>;
template class Sequential<float>;
template class Sequential<double>;

}  // namespace biasbench::train
