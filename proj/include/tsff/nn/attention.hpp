#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tsff/nn/layers.hpp"

namespace tsff::nn {

// X'[n,h,c,t] = sum_d X[n,d,c,t] * W[h,d,c]. Diffuses each electrode's
// signal into a learnable depth axis.
template <typename T>
class ChannelAttention : public Layer<T> {
 public:
  ChannelAttention(std::string name, std::size_t depth_out, std::size_t depth_in, std::size_t channels)
      : dout_(depth_out), din_(depth_in), chans_(channels) {
    weight_ = Param<T>(name + ".weight", Tensor<T>(depth_out, depth_in, 1, channels));
  }

  // Normal with Xavier scale: fan_in = depth_in * C, fan_out = depth_out * C.
  void init(Rng& rng) override {
    const double std = std::sqrt(2.0 / static_cast<double>((din_ + dout_) * chans_));
    for (auto& v : weight_.value.vec()) v = static_cast<T>(std * rng.normal());
  }

  void params(std::vector<Param<T>*>& out) override { out.push_back(&weight_); }

  Tensor<T> forward(const Tensor<T>& x, Mode&) override {
    if (x.c() != din_ || x.h() != chans_)
      throw ArgumentError("ChannelAttention: expected (n, " + std::to_string(din_) + ", " + std::to_string(chans_) +
                          ", t), got " + x.shape_string());
    x_ = x;
    const std::size_t N = x.n(), T_ = x.w();
    Tensor<T> y(N, dout_, chans_, T_);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t h = 0; h < dout_; ++h)
        for (std::size_t d = 0; d < din_; ++d)
          for (std::size_t c = 0; c < chans_; ++c) {
            const T w = weight_.value.at(h, d, 0, c);
            const T* xi = &x.at(n, d, c, 0);
            T* yo = &y.at(n, h, c, 0);
            for (std::size_t t = 0; t < T_; ++t) yo[t] += w * xi[t];
          }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const std::size_t N = x_.n(), T_ = x_.w();
    Tensor<T> gx(x_.n(), x_.c(), x_.h(), x_.w());
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t h = 0; h < dout_; ++h)
        for (std::size_t d = 0; d < din_; ++d)
          for (std::size_t c = 0; c < chans_; ++c) {
            const T w = weight_.value.at(h, d, 0, c);
            const T* xi = &x_.at(n, d, c, 0);
            const T* g = &gy.at(n, h, c, 0);
            T* gi = &gx.at(n, d, c, 0);
            double acc = 0.0;
            for (std::size_t t = 0; t < T_; ++t) {
              acc += static_cast<double>(g[t]) * xi[t];
              gi[t] += w * g[t];
            }
            weight_.grad.at(h, d, 0, c) += static_cast<T>(acc);
          }
    return gx;
  }

  Param<T>& weight() { return weight_; }

 private:
  std::size_t dout_, din_, chans_;
  Param<T> weight_;
  Tensor<T> x_;
};

// Depth attention on (n, D, H, W) feature maps:
//   p[n,d,w] = mean_h x[n,d,h,w]
//   q[n,d,w] = b + sum_j k[j] p[n, d + j - k/2, w]     (zero padded along d)
//   s        = softmax over d of q
//   y        = D * s[n,d,w] * x[n,d,h,w]
template <typename T>
class DepthAttention : public Layer<T> {
 public:
  DepthAttention(std::string name, std::size_t depth, std::size_t kernel = 7) : depth_(depth), k_(kernel) {
    if (kernel % 2 == 0) throw ArgumentError("DepthAttention: kernel must be odd");
    kernel_ = Param<T>(name + ".conv.weight", Tensor<T>(1, 1, kernel, 1));
    bias_ = Param<T>(name + ".conv.bias", Tensor<T>(1, 1, 1, 1));
  }

  void init(Rng& rng) override {
    const double bound = 1.0 / std::sqrt(static_cast<double>(k_));
    detail::uniform_fill(kernel_.value, rng, bound);
    detail::uniform_fill(bias_.value, rng, bound);
  }

  void params(std::vector<Param<T>*>& out) override {
    out.push_back(&kernel_);
    out.push_back(&bias_);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode&) override {
    detail::check_dims(x, depth_, "DepthAttention");
    x_ = x;
    const std::size_t N = x.n(), D = depth_, H = x.h(), W = x.w();
    const auto half = static_cast<std::ptrdiff_t>(k_ / 2);
    pooled_.assign(N * D * W, 0.0);
    soft_.assign(N * D * W, 0.0);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t d = 0; d < D; ++d)
        for (std::size_t h = 0; h < H; ++h) {
          const T* xi = &x.at(n, d, h, 0);
          double* p = &pooled_[(n * D + d) * W];
          for (std::size_t w = 0; w < W; ++w) p[w] += xi[w];
        }
    for (auto& v : pooled_) v /= static_cast<double>(H);

    std::vector<double> q(D);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t w = 0; w < W; ++w) {
        double mx = -INFINITY;
        for (std::size_t d = 0; d < D; ++d) {
          double s = bias_.value[0];
          for (std::size_t j = 0; j < k_; ++j) {
            const auto src = static_cast<std::ptrdiff_t>(d) + static_cast<std::ptrdiff_t>(j) - half;
            if (src >= 0 && src < static_cast<std::ptrdiff_t>(D))
              s += kernel_.value[j] * pooled_[(n * D + static_cast<std::size_t>(src)) * W + w];
          }
          q[d] = s;
          mx = std::max(mx, s);
        }
        double z = 0.0;
        for (std::size_t d = 0; d < D; ++d) z += (q[d] = std::exp(q[d] - mx));
        for (std::size_t d = 0; d < D; ++d) soft_[(n * D + d) * W + w] = q[d] / z;
      }

    Tensor<T> y(x.n(), x.c(), x.h(), x.w());
    const double scale = static_cast<double>(D);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t d = 0; d < D; ++d)
        for (std::size_t h = 0; h < H; ++h) {
          const T* xi = &x.at(n, d, h, 0);
          const double* s = &soft_[(n * D + d) * W];
          T* yo = &y.at(n, d, h, 0);
          for (std::size_t w = 0; w < W; ++w) yo[w] = static_cast<T>(scale * s[w] * xi[w]);
        }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const std::size_t N = x_.n(), D = depth_, H = x_.h(), W = x_.w();
    const auto half = static_cast<std::ptrdiff_t>(k_ / 2);
    const double scale = static_cast<double>(D);
    Tensor<T> gx(x_.n(), x_.c(), x_.h(), x_.w());
    std::vector<double> gs(N * D * W, 0.0);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t d = 0; d < D; ++d)
        for (std::size_t h = 0; h < H; ++h) {
          const T* xi = &x_.at(n, d, h, 0);
          const T* g = &gy.at(n, d, h, 0);
          const double* s = &soft_[(n * D + d) * W];
          double* gsd = &gs[(n * D + d) * W];
          T* gi = &gx.at(n, d, h, 0);
          for (std::size_t w = 0; w < W; ++w) {
            gsd[w] += scale * g[w] * xi[w];
            gi[w] = static_cast<T>(scale * s[w] * g[w]);
          }
        }
    // softmax backward, then the depth convolution.
    std::vector<double> gq(D), gp(N * D * W, 0.0);
    double gb = 0.0;
    std::vector<double> gk(k_, 0.0);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t w = 0; w < W; ++w) {
        double dot = 0.0;
        for (std::size_t d = 0; d < D; ++d) dot += soft_[(n * D + d) * W + w] * gs[(n * D + d) * W + w];
        for (std::size_t d = 0; d < D; ++d) {
          const double s = soft_[(n * D + d) * W + w];
          gq[d] = s * (gs[(n * D + d) * W + w] - dot);
          gb += gq[d];
        }
        for (std::size_t d = 0; d < D; ++d)
          for (std::size_t j = 0; j < k_; ++j) {
            const auto src = static_cast<std::ptrdiff_t>(d) + static_cast<std::ptrdiff_t>(j) - half;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(D)) continue;
            const std::size_t idx = (n * D + static_cast<std::size_t>(src)) * W + w;
            gk[j] += gq[d] * pooled_[idx];
            gp[idx] += gq[d] * kernel_.value[j];
          }
      }
    bias_.grad[0] += static_cast<T>(gb);
    for (std::size_t j = 0; j < k_; ++j) kernel_.grad[j] += static_cast<T>(gk[j]);
    const double invH = 1.0 / static_cast<double>(H);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t d = 0; d < D; ++d)
        for (std::size_t h = 0; h < H; ++h) {
          const double* p = &gp[(n * D + d) * W];
          T* gi = &gx.at(n, d, h, 0);
          for (std::size_t w = 0; w < W; ++w) gi[w] += static_cast<T>(p[w] * invH);
        }
    return gx;
  }

 private:
  std::size_t depth_, k_;
  Param<T> kernel_, bias_;
  Tensor<T> x_;
  std::vector<double> pooled_, soft_;
};

}  // namespace tsff::nn
