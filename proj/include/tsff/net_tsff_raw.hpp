#pragma once

#include <string>
#include <vector>

#include "tsff/data_io.hpp"
#include "tsff/nn/attention.hpp"
#include "tsff/nn/layers.hpp"

namespace tsff {

enum class RawPooling { kFixed, kAdaptive };

// Time-space extractor:
//   channel attention (depth D) -> pointwise conv D->D1 -> BN -> temporal
//   depthwise conv 1xK -> BN -> GELU -> depth attention -> pointwise conv
//   D1->D2 -> BN -> spatial depthwise conv Cx1 -> BN -> GELU -> avg pool -> dropout
// Defaults follow the LMDA-Net reference (D=9, K=75, D1=24, D2=9, attention
// kernel 7, dropout 0.65). The final pooling is adaptive by default so the
// flattened output has pool_bins * D2 = 576 features, matching TSFF-img.
struct RawNetConfig {
  std::size_t channels = 3;
  std::size_t samples = 1000;
  std::size_t n_classes = 2;
  std::size_t depth = 9;
  std::size_t temporal_kernel = 75;
  std::size_t depth1 = 24;
  std::size_t depth2 = 9;
  std::size_t attention_kernel = 7;
  RawPooling pooling = RawPooling::kAdaptive;
  std::size_t pool_width = 5;  // kFixed
  std::size_t pool_bins = 64;  // kAdaptive
  double dropout_p = 0.65;

  std::size_t conv_width() const { return samples + 1 - temporal_kernel; }
  std::size_t pooled_width() const {
    return pooling == RawPooling::kAdaptive ? pool_bins : conv_width() / pool_width;
  }
  std::size_t feature_dim() const { return depth2 * pooled_width(); }

  void validate() const {
    if (channels == 0 || depth == 0 || depth1 == 0 || depth2 == 0) throw ArgumentError("RawNetConfig: empty layer");
    if (n_classes < 2) throw ArgumentError("RawNetConfig: need at least two classes");
    if (temporal_kernel == 0 || samples < temporal_kernel)
      throw ArgumentError("RawNetConfig: trial shorter than temporal kernel");
    if (pooling == RawPooling::kAdaptive && (pool_bins == 0 || pool_bins > conv_width()))
      throw ArgumentError("RawNetConfig: pool_bins must be in [1, T - K + 1]");
    if (pooling == RawPooling::kFixed && (pool_width == 0 || pool_width > conv_width()))
      throw ArgumentError("RawNetConfig: pool_width must be in [1, T - K + 1]");
  }
};

// Packs trials [first, first + count) into an (n, 1, C, T) tensor.
template <typename T>
Tensor<T> trials_tensor(const TrialSet& trials, std::span<const std::size_t> indices) {
  Tensor<T> x(indices.size(), 1, trials.n_channels, trials.n_samples);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    auto src = trials.trial(indices[k]);
    std::transform(src.begin(), src.end(), x.sample(k).begin(), [](float v) { return static_cast<T>(v); });
  }
  return x;
}

template <typename T>
class TsffRawNet {
 public:
  explicit TsffRawNet(const RawNetConfig& cfg, bool with_head = true, const std::string& prefix = "raw")
      : cfg_(cfg) {
    cfg.validate();
    attention_ = &features_.template add<nn::ChannelAttention<T>>(prefix + ".channel_weight", cfg.depth, 1,
                                                                  cfg.channels);
    features_.template add<nn::Conv2d<T>>(prefix + ".time_pointwise",
                                          nn::Conv2dSpec{cfg.depth, cfg.depth1, 1, 1, 0, 0, 1, false});
    features_.template add<nn::BatchNorm2d<T>>(prefix + ".time_bn1", cfg.depth1);
    features_.template add<nn::Conv2d<T>>(
        prefix + ".time_depthwise", nn::Conv2dSpec{cfg.depth1, cfg.depth1, 1, cfg.temporal_kernel, 0, 0, cfg.depth1, false});
    features_.template add<nn::BatchNorm2d<T>>(prefix + ".time_bn2", cfg.depth1);
    features_.template add<nn::GELU<T>>();
    features_.template add<nn::DepthAttention<T>>(prefix + ".depth_attention", cfg.depth1, cfg.attention_kernel);
    features_.template add<nn::Conv2d<T>>(prefix + ".chan_pointwise",
                                          nn::Conv2dSpec{cfg.depth1, cfg.depth2, 1, 1, 0, 0, 1, false});
    features_.template add<nn::BatchNorm2d<T>>(prefix + ".chan_bn1", cfg.depth2);
    features_.template add<nn::Conv2d<T>>(
        prefix + ".chan_depthwise", nn::Conv2dSpec{cfg.depth2, cfg.depth2, cfg.channels, 1, 0, 0, cfg.depth2, false});
    features_.template add<nn::BatchNorm2d<T>>(prefix + ".chan_bn2", cfg.depth2);
    features_.template add<nn::GELU<T>>();
    if (cfg.pooling == RawPooling::kAdaptive)
      features_.template add<nn::AdaptiveAvgPoolW<T>>(cfg.pool_bins);
    else
      features_.template add<nn::AvgPool2d<T>>(1, cfg.pool_width);
    features_.template add<nn::Dropout<T>>(cfg.dropout_p);
    if (with_head) head_ = std::make_unique<nn::Linear<T>>(prefix + ".fc", cfg.feature_dim(), cfg.n_classes);
  }

  void init(std::uint64_t seed) {
    Rng rng = Rng::stream(seed, 0x4A3);
    features_.init(rng);
    if (head_) head_->init(rng);
  }

  // trials: (n, 1, C, T) -> (n, feature_dim)
  Tensor<T> forward_features(const Tensor<T>& trials, nn::Mode& mode) {
    if (trials.c() != 1 || trials.h() != cfg_.channels || trials.w() != cfg_.samples)
      throw ArgumentError("TsffRawNet: expected trials (n, 1, " + std::to_string(cfg_.channels) + ", " +
                          std::to_string(cfg_.samples) + "), got " + trials.shape_string());
    Tensor<T> h = features_.forward(trials, mode);
    map_dims_ = h.dims();
    return h.reshaped(h.n(), h.stride0(), 1, 1);
  }

  void backward_features(const Tensor<T>& g_features) {
    features_.backward(g_features.reshaped(map_dims_[0], map_dims_[1], map_dims_[2], map_dims_[3]));
  }

  Tensor<T> forward_classify(const Tensor<T>& trials, nn::Mode& mode) {
    if (!head_) throw ArgumentError("TsffRawNet: built without a classifier head");
    return head_->forward(forward_features(trials, mode), mode);
  }

  void backward_classify(const Tensor<T>& g_logits) { backward_features(head_->backward(g_logits)); }

  std::vector<nn::Param<T>*> params() {
    std::vector<nn::Param<T>*> out;
    features_.params(out);
    if (head_) head_->params(out);
    return out;
  }

  std::size_t count_params() { return nn::count_learnable(params()); }
  nn::ChannelAttention<T>& channel_attention() { return *attention_; }
  const RawNetConfig& config() const { return cfg_; }

 private:
  RawNetConfig cfg_;
  nn::Sequential<T> features_;
  nn::ChannelAttention<T>* attention_ = nullptr;
  std::unique_ptr<nn::Linear<T>> head_;
  std::array<std::size_t, 4> map_dims_{};
};

}  // namespace tsff
