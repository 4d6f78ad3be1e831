#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tsff/nn/layers.hpp"

namespace tsff {

// Shallow spectrogram CNN:
//   c1  conv 16@4x4 pad 2 + bias -> ReLU -> avgpool 8 -> dropout
//   c2  conv 32@4x4 pad 2 + bias -> ReLU -> avgpool 3 -> dropout
//   c3  pointwise conv L@1x1 -> BN -> depthwise conv L@4x4 pad 2 -> BN -> ReLU -> avgpool 3 -> dropout
//   fc  linear to M classes (standalone use)
struct ImgNetConfig {
  std::size_t input_size = 224;
  std::size_t in_channels = 3;  // 9 for depthwise stitching
  std::size_t n_classes = 2;
  std::size_t feature_channels_last = 64;
  double dropout_p = 0.25;

  // Side length of the final feature map.
  std::size_t feature_side() const {
    std::size_t s = input_size + 1;  // 4x4 conv, pad 2
    s /= 8;
    s += 1;
    s /= 3;
    s += 1;  // depthwise 4x4, pad 2
    return s / 3;
  }
  std::size_t feature_dim() const { return feature_channels_last * feature_side() * feature_side(); }

  void validate() const {
    if (in_channels == 0 || n_classes < 2 || feature_channels_last == 0)
      throw ArgumentError("ImgNetConfig: channels and classes must be positive (M >= 2)");
    if (input_size < 39) throw ArgumentError("ImgNetConfig: input_size too small (need >= 39)");
  }
};

template <typename T>
class TsffImgNet {
 public:
  explicit TsffImgNet(const ImgNetConfig& cfg, bool with_head = true, const std::string& prefix = "img")
      : cfg_(cfg), with_head_(with_head) {
    cfg.validate();
    const std::size_t L = cfg.feature_channels_last;
    features_.template add<nn::Conv2d<T>>(prefix + ".c1", nn::Conv2dSpec{cfg.in_channels, 16, 4, 4, 2, 2, 1, true},
                                          false);
    features_.template add<nn::ReLU<T>>();
    features_.template add<nn::AvgPool2d<T>>(8, 8);
    features_.template add<nn::Dropout<T>>(cfg.dropout_p);
    features_.template add<nn::Conv2d<T>>(prefix + ".c2", nn::Conv2dSpec{16, 32, 4, 4, 2, 2, 1, true});
    features_.template add<nn::ReLU<T>>();
    features_.template add<nn::AvgPool2d<T>>(3, 3);
    features_.template add<nn::Dropout<T>>(cfg.dropout_p);
    features_.template add<nn::Conv2d<T>>(prefix + ".pointwise", nn::Conv2dSpec{32, L, 1, 1, 0, 0, 1, false});
    features_.template add<nn::BatchNorm2d<T>>(prefix + ".bn1", L);
    features_.template add<nn::Conv2d<T>>(prefix + ".depthwise", nn::Conv2dSpec{L, L, 4, 4, 2, 2, L, false});
    features_.template add<nn::BatchNorm2d<T>>(prefix + ".bn2", L);
    features_.template add<nn::ReLU<T>>();
    features_.template add<nn::AvgPool2d<T>>(3, 3);
    features_.template add<nn::Dropout<T>>(cfg.dropout_p);
    if (with_head_) head_ = std::make_unique<nn::Linear<T>>(prefix + ".fc", cfg.feature_dim(), cfg.n_classes);
  }

  void init(std::uint64_t seed) {
    Rng rng = Rng::stream(seed, 0x1D6);
    features_.init(rng);
    if (head_) head_->init(rng);
  }

  // images: (n, in_channels, size, size) -> (n, feature_dim)
  Tensor<T> forward_features(const Tensor<T>& images, nn::Mode& mode) {
    if (images.c() != cfg_.in_channels || images.h() != cfg_.input_size || images.w() != cfg_.input_size)
      throw ArgumentError("TsffImgNet: expected images (n, " + std::to_string(cfg_.in_channels) + ", " +
                          std::to_string(cfg_.input_size) + ", " + std::to_string(cfg_.input_size) + "), got " +
                          images.shape_string());
    Tensor<T> h = features_.forward(images, mode);
    map_dims_ = h.dims();
    return h.reshaped(h.n(), h.stride0(), 1, 1);
  }

  void backward_features(const Tensor<T>& g_features) {
    features_.backward(g_features.reshaped(map_dims_[0], map_dims_[1], map_dims_[2], map_dims_[3]));
  }

  Tensor<T> forward_classify(const Tensor<T>& images, nn::Mode& mode) {
    if (!head_) throw ArgumentError("TsffImgNet: built without a classifier head");
    return head_->forward(forward_features(images, mode), mode);
  }

  void backward_classify(const Tensor<T>& g_logits) { backward_features(head_->backward(g_logits)); }

  std::vector<nn::Param<T>*> params() {
    std::vector<nn::Param<T>*> out;
    features_.params(out);
    if (head_) head_->params(out);
    return out;
  }

  std::size_t count_params() { return nn::count_learnable(params()); }

  // Learnable parameter count per named layer, in network order.
  std::vector<std::pair<std::string, std::size_t>> layer_param_counts() {
    std::vector<std::pair<std::string, std::size_t>> out;
    for (auto* p : params()) {
      if (!p->learnable) continue;
      const std::string layer = p->name.substr(0, p->name.rfind('.'));
      if (out.empty() || out.back().first != layer) out.emplace_back(layer, 0);
      out.back().second += p->value.size();
    }
    return out;
  }

  const ImgNetConfig& config() const { return cfg_; }

 private:
  ImgNetConfig cfg_;
  bool with_head_;
  nn::Sequential<T> features_;
  std::unique_ptr<nn::Linear<T>> head_;
  std::array<std::size_t, 4> map_dims_{};
};

}  // namespace tsff
