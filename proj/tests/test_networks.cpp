#include <gtest/gtest.h>

#include <cmath>

#include "grad_check.hpp"
#include "tsff/net_tsff_img.hpp"
#include "tsff/net_tsff_raw.hpp"

namespace {

using tsff::Rng;
using tsff::Tensor;
namespace nn = tsff::nn;

TEST(ImgNet, ParameterCounts) {
  tsff::TsffImgNet<float> net(tsff::ImgNetConfig{});
  EXPECT_EQ(net.count_params(), 13490u);
  const std::vector<std::pair<std::string, std::size_t>> expected = {
      {"img.c1", 784},  {"img.c2", 8224},        {"img.pointwise", 2048}, {"img.bn1", 128},
      {"img.depthwise", 1024}, {"img.bn2", 128}, {"img.fc", 1154}};
  EXPECT_EQ(net.layer_param_counts(), expected);
  tsff::TsffImgNet<float> four(tsff::ImgNetConfig{.n_classes = 4});
  EXPECT_EQ(four.count_params(), 14644u);
}

TEST(ImgNet, FeatureDim) {
  const tsff::ImgNetConfig cfg;
  EXPECT_EQ(cfg.feature_side(), 3u);
  EXPECT_EQ(cfg.feature_dim(), 576u);
  tsff::TsffImgNet<float> net(cfg);
  net.init(1);
  nn::Mode mode;
  const auto f = net.forward_features(Tensor<float>(2, 3, 224, 224, 0.5f), mode);
  EXPECT_EQ(f.dims(), (std::array<std::size_t, 4>{2, 576, 1, 1}));
  EXPECT_EQ(net.forward_classify(Tensor<float>(2, 3, 224, 224), mode).dims(),
            (std::array<std::size_t, 4>{2, 2, 1, 1}));
}

TEST(ImgNet, InitDeterministic) {
  tsff::TsffImgNet<float> a(tsff::ImgNetConfig{}), b(tsff::ImgNetConfig{}), c(tsff::ImgNetConfig{});
  a.init(7);
  b.init(7);
  c.init(8);
  auto pa = a.params(), pb = b.params(), pc = c.params();
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->value.vec(), pb[i]->value.vec()) << pa[i]->name;
    differs = differs || pa[i]->value.vec() != pc[i]->value.vec();
    if (pa[i]->name.ends_with("bn1.weight") || pa[i]->name.ends_with("bn2.weight")) {
      for (float v : pa[i]->value.vec()) EXPECT_EQ(v, 1.0f);
    }
    if (pa[i]->name.ends_with("bn1.bias") || pa[i]->name.ends_with("bn2.bias")) {
      for (float v : pa[i]->value.vec()) EXPECT_EQ(v, 0.0f);
    }
  }
  EXPECT_TRUE(differs);
}

TEST(ImgNet, InferenceDeterministicAndFinite) {
  tsff::TsffImgNet<float> net(tsff::ImgNetConfig{});
  net.init(3);
  nn::Mode mode;
  const Tensor<float> zero(2, 3, 224, 224);
  const auto a = net.forward_features(zero, mode);
  const auto b = net.forward_features(zero, mode);
  EXPECT_EQ(a.vec(), b.vec());
  for (float v : a.vec()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_THROW(net.forward_features(Tensor<float>(1, 3, 100, 100), mode), tsff::ArgumentError);
}

TEST(ImgNet, GradientsOnFourImages) {
  tsff::TsffImgNet<double> net(tsff::ImgNetConfig{});
  net.init(11);
  Rng rng(12);
  Tensor<double> x(4, 3, 224, 224);
  for (auto& v : x.vec()) v = rng.uniform();
  const auto rep = tsff::test::network_grad(net, x, 6, 13, 1e-7);
  EXPECT_LT(rep.max_rel, 1e-3) << rep.worst;
  EXPECT_GE(rep.checked, 50u);
}

TEST(RawNet, ParameterCountAndDims) {
  const tsff::RawNetConfig cfg;
  EXPECT_EQ(cfg.feature_dim(), 576u);
  tsff::TsffRawNet<float> net(cfg);
  // 27 + 216 + 48 + 1800 + 48 + 8 + 216 + 18 + 27 + 18 + 1154
  EXPECT_EQ(net.count_params(), 3580u);
  net.init(1);
  nn::Mode mode;
  const auto f = net.forward_features(Tensor<float>(3, 1, 3, 1000, 0.1f), mode);
  EXPECT_EQ(f.dims(), (std::array<std::size_t, 4>{3, 576, 1, 1}));
  tsff::RawNetConfig fixed;
  fixed.pooling = tsff::RawPooling::kFixed;
  EXPECT_EQ(fixed.feature_dim(), 9u * 185u);
  EXPECT_THROW(net.forward_features(Tensor<float>(1, 1, 3, 999), mode), tsff::ArgumentError);
}

TEST(RawNet, InferenceDeterministic) {
  tsff::TsffRawNet<float> net(tsff::RawNetConfig{});
  net.init(4);
  Rng rng(5);
  Tensor<float> x(2, 1, 3, 1000);
  for (auto& v : x.vec()) v = static_cast<float>(rng.normal());
  nn::Mode mode;
  EXPECT_EQ(net.forward_classify(x, mode).vec(), net.forward_classify(x, mode).vec());
}

TEST(RawNet, GradientsOnFourTrials) {
  tsff::TsffRawNet<double> net(tsff::RawNetConfig{});
  net.init(21);
  Rng rng(22);
  auto x = tsff::test::random_tensor(4, 1, 3, 1000, rng);
  const auto rep = tsff::test::network_grad(net, x, 12, 23);
  EXPECT_LT(rep.max_rel, 1e-3) << rep.worst;
  EXPECT_GE(rep.checked, 100u);
}

TEST(RawNet, ChannelAttentionIsFirstLayer) {
  tsff::TsffRawNet<double> net(tsff::RawNetConfig{});
  EXPECT_EQ(net.channel_attention().weight().value.dims(), (std::array<std::size_t, 4>{9, 1, 1, 3}));
  EXPECT_EQ(net.params().front()->name, "raw.channel_weight.weight");
}

}  // namespace
