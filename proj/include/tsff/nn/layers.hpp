#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "tsff/error.hpp"
#include "tsff/random.hpp"
#include "tsff/tensor.hpp"

namespace tsff::nn {

template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool learnable = true;  // false for running statistics

  Param() = default;
  Param(std::string n, Tensor<T> v, bool learn = true)
      : name(std::move(n)), value(std::move(v)), learnable(learn) {
    grad = Tensor<T>(value.n(), value.c(), value.h(), value.w());
  }
  void zero_grad() { grad.fill(T(0)); }
};

// Forward-pass context: training enables dropout and batch statistics.
struct Mode {
  bool training = false;
  Rng* rng = nullptr;
};

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, Mode& mode) = 0;
  // Consumes dL/dy, accumulates parameter gradients, returns dL/dx.
  virtual Tensor<T> backward(const Tensor<T>& gy) = 0;
  virtual void params(std::vector<Param<T>*>& /*out*/) {}
  virtual void init(Rng& /*rng*/) {}
};

namespace detail {

template <typename T>
void uniform_fill(Tensor<T>& t, Rng& rng, double bound) {
  for (auto& v : t.vec()) v = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename T>
inline void check_dims(const Tensor<T>& x, std::size_t c, const char* who) {
  if (x.c() != c)
    throw ArgumentError(std::string(who) + ": expected " + std::to_string(c) + " input channels, got " +
                        x.shape_string());
}

}  // namespace detail

struct Conv2dSpec {
  std::size_t in = 1, out = 1;
  std::size_t kh = 1, kw = 1;
  std::size_t ph = 0, pw = 0;
  std::size_t groups = 1;
  bool bias = false;
};

// Stride-1 grouped 2-D convolution (cross-correlation) with zero padding.
template <typename T>
class Conv2d : public Layer<T> {
 public:
  Conv2d(std::string name, Conv2dSpec spec, bool input_grad = true) : spec_(spec), input_grad_(input_grad) {
    if (spec.groups == 0 || spec.in % spec.groups || spec.out % spec.groups)
      throw ArgumentError("Conv2d: channels not divisible by groups");
    weight_ = Param<T>(name + ".weight", Tensor<T>(spec.out, spec.in / spec.groups, spec.kh, spec.kw));
    if (spec.bias) bias_ = Param<T>(name + ".bias", Tensor<T>(spec.out, 1, 1, 1));
  }

  void init(Rng& rng) override {
    const double fan_in = static_cast<double>(spec_.in / spec_.groups * spec_.kh * spec_.kw);
    const double bound = 1.0 / std::sqrt(fan_in);
    detail::uniform_fill(weight_.value, rng, bound);
    if (spec_.bias) detail::uniform_fill(bias_.value, rng, bound);
  }

  void params(std::vector<Param<T>*>& out) override {
    out.push_back(&weight_);
    if (spec_.bias) out.push_back(&bias_);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode&) override {
    detail::check_dims(x, spec_.in, "Conv2d");
    const std::size_t N = x.n(), H = x.h(), W = x.w();
    const std::size_t Hp = H + 2 * spec_.ph, Wp = W + 2 * spec_.pw;
    if (Hp < spec_.kh || Wp < spec_.kw) throw ArgumentError("Conv2d: input smaller than kernel");
    const std::size_t Ho = Hp - spec_.kh + 1, Wo = Wp - spec_.kw + 1;
    xp_ = Tensor<T>(N, spec_.in, Hp, Wp);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < spec_.in; ++c)
        for (std::size_t y = 0; y < H; ++y)
          std::copy_n(&x.at(n, c, y, 0), W, &xp_.at(n, c, y + spec_.ph, spec_.pw));
    in_h_ = H;
    in_w_ = W;

    const std::size_t ipg = spec_.in / spec_.groups, opg = spec_.out / spec_.groups;
    const std::size_t K = spec_.kh * spec_.kw;
    Tensor<T> y(N, spec_.out, Ho, Wo);
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t oc = 0; oc < spec_.out; ++oc) {
        T* yo = &y.at(n, oc, 0, 0);
        const T b = spec_.bias ? bias_.value[oc] : T(0);
        std::fill_n(yo, Ho * Wo, b);
        const std::size_t g = oc / opg;
        for (std::size_t icl = 0; icl < ipg; ++icl) {
          const T* xi = &xp_.at(n, g * ipg + icl, 0, 0);
          const T* wk = weight_.value.data() + (oc * ipg + icl) * K;
          for (std::size_t ky = 0; ky < spec_.kh; ++ky)
            for (std::size_t kx = 0; kx < spec_.kw; ++kx) {
              const T wv = wk[ky * spec_.kw + kx];
              for (std::size_t yy = 0; yy < Ho; ++yy) {
                T* __restrict orow = yo + yy * Wo;
                const T* __restrict irow = xi + (yy + ky) * Wp + kx;
#pragma omp simd
                for (std::size_t xx = 0; xx < Wo; ++xx) orow[xx] += wv * irow[xx];
              }
            }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const std::size_t N = gy.n(), Ho = gy.h(), Wo = gy.w();
    const std::size_t Hp = xp_.h(), Wp = xp_.w();
    const std::size_t ipg = spec_.in / spec_.groups, opg = spec_.out / spec_.groups;
    const std::size_t K = spec_.kh * spec_.kw;
    std::vector<double> gw(weight_.value.size(), 0.0);
    Tensor<T> gxp;
    if (input_grad_) gxp = Tensor<T>(N, spec_.in, Hp, Wp);
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t oc = 0; oc < spec_.out; ++oc) {
        const T* go = &gy.at(n, oc, 0, 0);
        if (spec_.bias) {
          double s = 0.0;
          for (std::size_t i = 0; i < Ho * Wo; ++i) s += go[i];
          bias_.grad[oc] += static_cast<T>(s);
        }
        const std::size_t g = oc / opg;
        for (std::size_t icl = 0; icl < ipg; ++icl) {
          const std::size_t ic = g * ipg + icl;
          const T* xi = &xp_.at(n, ic, 0, 0);
          const std::size_t wbase = (oc * ipg + icl) * K;
          for (std::size_t ky = 0; ky < spec_.kh; ++ky)
            for (std::size_t kx = 0; kx < spec_.kw; ++kx) {
              double acc = 0.0;
              for (std::size_t yy = 0; yy < Ho; ++yy) {
                const T* __restrict grow = go + yy * Wo;
                const T* __restrict irow = xi + (yy + ky) * Wp + kx;
                T dot = T(0);
#pragma omp simd reduction(+ : dot)
                for (std::size_t xx = 0; xx < Wo; ++xx) dot += grow[xx] * irow[xx];
                acc += dot;
              }
              gw[wbase + ky * spec_.kw + kx] += acc;
            }
          if (!input_grad_) continue;
          T* gi = &gxp.at(n, ic, 0, 0);
          const T* wk = weight_.value.data() + wbase;
          for (std::size_t ky = 0; ky < spec_.kh; ++ky)
            for (std::size_t kx = 0; kx < spec_.kw; ++kx) {
              const T wv = wk[ky * spec_.kw + kx];
              for (std::size_t yy = 0; yy < Ho; ++yy) {
                T* __restrict irow = gi + (yy + ky) * Wp + kx;
                const T* __restrict grow = go + yy * Wo;
#pragma omp simd
                for (std::size_t xx = 0; xx < Wo; ++xx) irow[xx] += wv * grow[xx];
              }
            }
        }
      }
    }
    for (std::size_t i = 0; i < gw.size(); ++i) weight_.grad[i] += static_cast<T>(gw[i]);
    if (!input_grad_) return {};
    Tensor<T> gx(N, spec_.in, in_h_, in_w_);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < spec_.in; ++c)
        for (std::size_t y = 0; y < in_h_; ++y)
          std::copy_n(&gxp.at(n, c, y + spec_.ph, spec_.pw), in_w_, &gx.at(n, c, y, 0));
    return gx;
  }

  const Conv2dSpec& spec() const { return spec_; }
  Param<T>& weight() { return weight_; }

 private:
  Conv2dSpec spec_;
  bool input_grad_;
  Param<T> weight_;
  Param<T> bias_;
  Tensor<T> xp_;
  std::size_t in_h_ = 0, in_w_ = 0;
};

// Per-channel batch normalization over (n, h, w).
template <typename T>
class BatchNorm2d : public Layer<T> {
 public:
  BatchNorm2d(std::string name, std::size_t channels, double momentum = 0.1, double eps = 1e-5)
      : channels_(channels), momentum_(momentum), eps_(eps) {
    gamma_ = Param<T>(name + ".weight", Tensor<T>(channels, 1, 1, 1, T(1)));
    beta_ = Param<T>(name + ".bias", Tensor<T>(channels, 1, 1, 1, T(0)));
    running_mean_ = Param<T>(name + ".running_mean", Tensor<T>(channels, 1, 1, 1, T(0)), false);
    running_var_ = Param<T>(name + ".running_var", Tensor<T>(channels, 1, 1, 1, T(1)), false);
  }

  void init(Rng&) override {
    gamma_.value.fill(T(1));
    beta_.value.fill(T(0));
    running_mean_.value.fill(T(0));
    running_var_.value.fill(T(1));
  }

  void params(std::vector<Param<T>*>& out) override {
    out.push_back(&gamma_);
    out.push_back(&beta_);
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode& mode) override {
    detail::check_dims(x, channels_, "BatchNorm2d");
    const std::size_t N = x.n(), HW = x.h() * x.w();
    const std::size_t M = N * HW;
    training_ = mode.training;
    inv_std_.assign(channels_, 0.0);
    xhat_ = Tensor<T>(x.n(), x.c(), x.h(), x.w());
    Tensor<T> y(x.n(), x.c(), x.h(), x.w());
    for (std::size_t c = 0; c < channels_; ++c) {
      double mean = 0.0, var = 0.0;
      if (training_) {
        if (M < 2) throw ArgumentError("BatchNorm2d: need more than one value per channel in training");
        for (std::size_t n = 0; n < N; ++n) {
          const T* p = &x.at(n, c, 0, 0);
          for (std::size_t i = 0; i < HW; ++i) mean += p[i];
        }
        mean /= static_cast<double>(M);
        for (std::size_t n = 0; n < N; ++n) {
          const T* p = &x.at(n, c, 0, 0);
          for (std::size_t i = 0; i < HW; ++i) {
            const double d = p[i] - mean;
            var += d * d;
          }
        }
        var /= static_cast<double>(M);
        running_mean_.value[c] = static_cast<T>((1.0 - momentum_) * running_mean_.value[c] + momentum_ * mean);
        running_var_.value[c] = static_cast<T>((1.0 - momentum_) * running_var_.value[c] +
                                               momentum_ * var * static_cast<double>(M) / static_cast<double>(M - 1));
      } else {
        mean = running_mean_.value[c];
        var = running_var_.value[c];
      }
      const double inv = 1.0 / std::sqrt(var + eps_);
      inv_std_[c] = inv;
      const double g = gamma_.value[c], b = beta_.value[c];
      for (std::size_t n = 0; n < N; ++n) {
        const T* p = &x.at(n, c, 0, 0);
        T* xh = &xhat_.at(n, c, 0, 0);
        T* q = &y.at(n, c, 0, 0);
        for (std::size_t i = 0; i < HW; ++i) {
          const double v = (p[i] - mean) * inv;
          xh[i] = static_cast<T>(v);
          q[i] = static_cast<T>(g * v + b);
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const std::size_t N = gy.n(), HW = gy.h() * gy.w();
    const double M = static_cast<double>(N * HW);
    Tensor<T> gx(gy.n(), gy.c(), gy.h(), gy.w());
    for (std::size_t c = 0; c < channels_; ++c) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const T* g = &gy.at(n, c, 0, 0);
        const T* xh = &xhat_.at(n, c, 0, 0);
        for (std::size_t i = 0; i < HW; ++i) {
          sum_g += g[i];
          sum_gx += static_cast<double>(g[i]) * xh[i];
        }
      }
      gamma_.grad[c] += static_cast<T>(sum_gx);
      beta_.grad[c] += static_cast<T>(sum_g);
      const double scale = gamma_.value[c] * inv_std_[c];
      for (std::size_t n = 0; n < N; ++n) {
        const T* g = &gy.at(n, c, 0, 0);
        const T* xh = &xhat_.at(n, c, 0, 0);
        T* o = &gx.at(n, c, 0, 0);
        for (std::size_t i = 0; i < HW; ++i) {
          if (training_)
            o[i] = static_cast<T>(scale * (g[i] - sum_g / M - xh[i] * sum_gx / M));
          else
            o[i] = static_cast<T>(scale * g[i]);
        }
      }
    }
    return gx;
  }

 private:
  std::size_t channels_;
  double momentum_, eps_;
  Param<T> gamma_, beta_, running_mean_, running_var_;
  Tensor<T> xhat_;
  std::vector<double> inv_std_;
  bool training_ = false;
};

template <typename T>
class ReLU : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode&) override {
    Tensor<T> y = x;
    mask_.resize(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      mask_[i] = y[i] > T(0);
      if (!mask_[i]) y[i] = T(0);
    }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (!mask_[i]) gx[i] = T(0);
    return gx;
  }

 private:
  std::vector<std::uint8_t> mask_;
};

// Exact (erf) GELU.
template <typename T>
class GELU : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode&) override {
    x_ = x;
    Tensor<T> y = x;
    for (auto& v : y.vec()) v = static_cast<T>(0.5 * v * (1.0 + std::erf(v * (std::numbers::sqrt2 / 2.0))));
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx = gy;
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double v = x_[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * (std::numbers::sqrt2 / 2.0)));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      gx[i] = static_cast<T>(gy[i] * (cdf + v * pdf));
    }
    return gx;
  }

 private:
  Tensor<T> x_;
};

// Non-overlapping average pooling (stride == kernel, floor).
template <typename T>
class AvgPool2d : public Layer<T> {
 public:
  AvgPool2d(std::size_t kh, std::size_t kw) : kh_(kh), kw_(kw) {}

  Tensor<T> forward(const Tensor<T>& x, Mode&) override {
    if (x.h() < kh_ || x.w() < kw_) throw ArgumentError("AvgPool2d: input smaller than window");
    in_dims_ = x.dims();
    const std::size_t Ho = x.h() / kh_, Wo = x.w() / kw_;
    const T inv = T(1) / static_cast<T>(kh_ * kw_);
    Tensor<T> y(x.n(), x.c(), Ho, Wo);
    for (std::size_t n = 0; n < x.n(); ++n)
      for (std::size_t c = 0; c < x.c(); ++c)
        for (std::size_t oy = 0; oy < Ho; ++oy) {
          T* orow = &y.at(n, c, oy, 0);
          for (std::size_t ky = 0; ky < kh_; ++ky) {
            const T* irow = &x.at(n, c, oy * kh_ + ky, 0);
            for (std::size_t ox = 0; ox < Wo; ++ox) {
              T s = T(0);
              for (std::size_t kx = 0; kx < kw_; ++kx) s += irow[ox * kw_ + kx];
              orow[ox] += s;
            }
          }
          for (std::size_t ox = 0; ox < Wo; ++ox) orow[ox] *= inv;
        }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx(in_dims_[0], in_dims_[1], in_dims_[2], in_dims_[3]);
    const T inv = T(1) / static_cast<T>(kh_ * kw_);
    for (std::size_t n = 0; n < gy.n(); ++n)
      for (std::size_t c = 0; c < gy.c(); ++c)
        for (std::size_t oy = 0; oy < gy.h(); ++oy)
          for (std::size_t ky = 0; ky < kh_; ++ky) {
            T* irow = &gx.at(n, c, oy * kh_ + ky, 0);
            const T* grow = &gy.at(n, c, oy, 0);
            for (std::size_t ox = 0; ox < gy.w(); ++ox) {
              const T v = grow[ox] * inv;
              for (std::size_t kx = 0; kx < kw_; ++kx) irow[ox * kw_ + kx] = v;
            }
          }
    return gx;
  }

 private:
  std::size_t kh_, kw_;
  std::array<std::size_t, 4> in_dims_{};
};

// Averages the width axis into a fixed number of bins:
// bin i covers [floor(i*W/B), ceil((i+1)*W/B)).
template <typename T>
class AdaptiveAvgPoolW : public Layer<T> {
 public:
  explicit AdaptiveAvgPoolW(std::size_t bins) : bins_(bins) {}

  Tensor<T> forward(const Tensor<T>& x, Mode&) override {
    if (x.w() < bins_) throw ArgumentError("AdaptiveAvgPoolW: fewer samples than bins");
    in_dims_ = x.dims();
    Tensor<T> y(x.n(), x.c(), x.h(), bins_);
    for (std::size_t n = 0; n < x.n(); ++n)
      for (std::size_t c = 0; c < x.c(); ++c)
        for (std::size_t r = 0; r < x.h(); ++r)
          for (std::size_t b = 0; b < bins_; ++b) {
            const auto [lo, hi] = range(b, x.w());
            double s = 0.0;
            for (std::size_t i = lo; i < hi; ++i) s += x.at(n, c, r, i);
            y.at(n, c, r, b) = static_cast<T>(s / static_cast<double>(hi - lo));
          }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx(in_dims_[0], in_dims_[1], in_dims_[2], in_dims_[3]);
    for (std::size_t n = 0; n < gy.n(); ++n)
      for (std::size_t c = 0; c < gy.c(); ++c)
        for (std::size_t r = 0; r < gy.h(); ++r)
          for (std::size_t b = 0; b < bins_; ++b) {
            const auto [lo, hi] = range(b, in_dims_[3]);
            const T v = gy.at(n, c, r, b) / static_cast<T>(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) gx.at(n, c, r, i) += v;
          }
    return gx;
  }

 private:
  std::pair<std::size_t, std::size_t> range(std::size_t b, std::size_t W) const {
    return {b * W / bins_, ((b + 1) * W + bins_ - 1) / bins_};
  }
  std::size_t bins_;
  std::array<std::size_t, 4> in_dims_{};
};

// Inverted dropout; identity outside training.
template <typename T>
class Dropout : public Layer<T> {
 public:
  explicit Dropout(double p) : p_(p) {
    if (p < 0.0 || p >= 1.0) throw ArgumentError("Dropout: p must be in [0, 1)");
  }

  Tensor<T> forward(const Tensor<T>& x, Mode& mode) override {
    active_ = mode.training && p_ > 0.0;
    if (!active_) return x;
    if (mode.rng == nullptr) throw ArgumentError("Dropout: training mode needs an rng");
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p_));
    mask_.resize(x.size());
    Tensor<T> y = x;
    for (std::size_t i = 0; i < y.size(); ++i) {
      mask_[i] = mode.rng->bernoulli(1.0 - p_) ? keep_scale : T(0);
      y[i] *= mask_[i];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    if (!active_) return gy;
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= mask_[i];
    return gx;
  }

 private:
  double p_;
  bool active_ = false;
  std::vector<T> mask_;
};

// y = x W^T + b on (n, d) inputs.
template <typename T>
class Linear : public Layer<T> {
 public:
  Linear(std::string name, std::size_t in, std::size_t out) : in_(in), out_(out) {
    weight_ = Param<T>(name + ".weight", Tensor<T>::matrix(out, in));
    bias_ = Param<T>(name + ".bias", Tensor<T>::matrix(out, 1));
  }

  void init(Rng& rng) override {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
    detail::uniform_fill(weight_.value, rng, bound);
    detail::uniform_fill(bias_.value, rng, bound);
  }

  void params(std::vector<Param<T>*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode&) override {
    if (x.stride0() != in_)
      throw ArgumentError("Linear: expected " + std::to_string(in_) + " features, got " + x.shape_string());
    x_ = x;
    Tensor<T> y = Tensor<T>::matrix(x.n(), out_);
    for (std::size_t n = 0; n < x.n(); ++n) {
      const T* xi = x.data() + n * in_;
      for (std::size_t o = 0; o < out_; ++o) {
        const T* w = weight_.value.data() + o * in_;
        double s = bias_.value[o];
        for (std::size_t i = 0; i < in_; ++i) s += static_cast<double>(w[i]) * xi[i];
        y[n * out_ + o] = static_cast<T>(s);
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx(x_.n(), x_.c(), x_.h(), x_.w());
    for (std::size_t n = 0; n < x_.n(); ++n) {
      const T* xi = x_.data() + n * in_;
      T* gi = gx.data() + n * in_;
      for (std::size_t o = 0; o < out_; ++o) {
        const T g = gy[n * out_ + o];
        bias_.grad[o] += g;
        T* gw = weight_.grad.data() + o * in_;
        const T* w = weight_.value.data() + o * in_;
        for (std::size_t i = 0; i < in_; ++i) {
          gw[i] += g * xi[i];
          gi[i] += g * w[i];
        }
      }
    }
    return gx;
  }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

 private:
  std::size_t in_, out_;
  Param<T> weight_, bias_;
  Tensor<T> x_;
};

// Runs layers in order; backward in reverse.
template <typename T>
class Sequential : public Layer<T> {
 public:
  template <typename L, typename... Args>
  L& add(Args&&... args) {
    auto p = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *p;
    layers_.push_back(std::move(p));
    return ref;
  }

  Tensor<T> forward(const Tensor<T>& x, Mode& mode) override {
    Tensor<T> h = x;
    for (auto& l : layers_) h = l->forward(h, mode);
    return h;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> g = gy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }

  void params(std::vector<Param<T>*>& out) override {
    for (auto& l : layers_) l->params(out);
  }

  void init(Rng& rng) override {
    for (auto& l : layers_) l->init(rng);
  }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

template <typename T>
std::size_t count_learnable(const std::vector<Param<T>*>& ps) {
  std::size_t n = 0;
  for (const auto* p : ps)
    if (p->learnable) n += p->value.size();
  return n;
}

}  // namespace tsff::nn
