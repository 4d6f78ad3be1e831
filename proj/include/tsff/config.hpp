#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "json.hpp"
#include "tsff/fusion.hpp"
#include "tsff/net_tsff_img.hpp"
#include "tsff/net_tsff_raw.hpp"
#include "tsff/optim.hpp"
#include "tsff/preprocess.hpp"
#include "tsff/timefreq.hpp"

namespace tsff {

using json = nlohmann::ordered_json;

enum class TrainMode { kFull, kRawOnly, kImgOnly, kFusionNoMmd };

inline std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kFull: return "full";
    case TrainMode::kRawOnly: return "raw_only";
    case TrainMode::kImgOnly: return "img_only";
    case TrainMode::kFusionNoMmd: return "fusion_no_mmd";
  }
  return "?";
}

inline TrainMode train_mode_from_string(const std::string& s) {
  if (s == "full") return TrainMode::kFull;
  if (s == "raw_only") return TrainMode::kRawOnly;
  if (s == "img_only") return TrainMode::kImgOnly;
  if (s == "fusion_no_mmd") return TrainMode::kFusionNoMmd;
  throw ArgumentError("unknown mode '" + s + "' (full|raw_only|img_only|fusion_no_mmd)");
}

inline bool uses_raw(TrainMode m) { return m != TrainMode::kImgOnly; }
inline bool uses_img(TrainMode m) { return m != TrainMode::kRawOnly; }

struct TsffConfig {
  TrainMode mode = TrainMode::kFull;
  std::string dataset_id = "2a";
  std::string subject_id;
  std::size_t n_classes = 2;
  std::uint64_t seed = 0;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 350;
  std::size_t eval_batch_size = 64;
  bool align = true;  // Euclidean alignment, fitted separately on each split
  FusionConfig fusion{};
  AdamWOptions optimizer{};
  SpectrogramSpec spectrogram{};
  RawNetConfig raw{};
  ImgNetConfig img{};

  // lambda actually applied: fusion_no_mmd and single-branch arms never use MMD.
  double effective_mmd_weight() const { return mode == TrainMode::kFull ? fusion.mmd_weight : 0.0; }

  void validate() const {
    if (n_classes < 2) throw ArgumentError("config: n_classes must be >= 2");
    // Batch norm and the MMD estimator both need at least two samples.
    if (batch_size < 2) throw ArgumentError("config: batch_size must be >= 2");
    if (max_epochs < 1 || max_epochs > 350) throw ArgumentError("config: max_epochs must be in [1, 350]");
    if (eval_batch_size < 1) throw ArgumentError("config: eval_batch_size must be >= 1");
    fusion.validate();
    optimizer.validate();
    spectrogram.cwt.validate();
    if (spectrogram.size != img.input_size) throw ArgumentError("config: spectrogram size must equal img input size");
    if (img.in_channels != spectrogram.image_channels(raw.channels))
      throw ArgumentError("config: img in_channels does not match the stitch mode");
    raw.validate();
    img.validate();
    if (raw.n_classes != n_classes || img.n_classes != n_classes) throw ArgumentError("config: class count mismatch");
    if (mode == TrainMode::kFull || mode == TrainMode::kFusionNoMmd)
      if (raw.feature_dim() != img.feature_dim())
        throw ArgumentError("config: fused feature dimensions differ (raw " + std::to_string(raw.feature_dim()) +
                            ", img " + std::to_string(img.feature_dim()) + ")");
  }
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ArgumentError("config: '" + where + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ArgumentError("config: unknown key '" + (where.empty() ? k : where + "." + k) + "'");
}

template <typename U>
void get_if(const json& j, const char* key, U& out) {
  if (j.contains(key)) out = j.at(key).get<U>();
}

}  // namespace detail

inline json to_json(const TsffConfig& c) {
  const auto& cwt = c.spectrogram.cwt;
  return json{
      {"mode", to_string(c.mode)},
      {"dataset", c.dataset_id},
      {"subject", c.subject_id},
      {"n_classes", c.n_classes},
      {"seed", c.seed},
      {"batch_size", c.batch_size},
      {"max_epochs", c.max_epochs},
      {"eval_batch_size", c.eval_batch_size},
      {"align", c.align},
      {"fusion",
       {{"freq_weight", c.fusion.freq_weight},
        {"mmd_weight", c.fusion.mmd_weight},
        {"bandwidth_multipliers", c.fusion.bandwidth_multipliers},
        {"softmax_axis", c.fusion.softmax_axis == SoftmaxAxis::kFeature ? "feature" : "batch"},
        {"fuse_normalized", c.fusion.fuse_normalized}}},
      {"optimizer",
       {{"lr", c.optimizer.lr},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"eps", c.optimizer.eps},
        {"weight_decay", c.optimizer.weight_decay}}},
      {"spectrogram",
       {{"beta", cwt.beta},
        {"f_lo", cwt.freqs.front()},
        {"f_hi", cwt.freqs.back()},
        {"n_freqs", cwt.freqs.size()},
        {"stitch", to_string(c.spectrogram.stitch)},
        {"size", c.spectrogram.size},
        {"render_height", c.spectrogram.render_height},
        {"render_width", c.spectrogram.render_width}}},
      {"raw_net",
       {{"depth", c.raw.depth},
        {"temporal_kernel", c.raw.temporal_kernel},
        {"depth1", c.raw.depth1},
        {"depth2", c.raw.depth2},
        {"attention_kernel", c.raw.attention_kernel},
        {"pooling", c.raw.pooling == RawPooling::kAdaptive ? "adaptive" : "fixed"},
        {"pool_bins", c.raw.pool_bins},
        {"pool_width", c.raw.pool_width},
        {"dropout", c.raw.dropout_p}}},
      {"img_net", {{"feature_channels_last", c.img.feature_channels_last}, {"dropout", c.img.dropout_p}}},
  };
}

// Applies j on top of base. Unknown keys are rejected; absent keys keep base.
inline TsffConfig apply_json(TsffConfig c, const json& j) {
  using detail::get_if;
  detail::check_keys(j,
                     {"mode", "dataset", "subject", "n_classes", "seed", "batch_size", "max_epochs", "eval_batch_size",
                      "align", "fusion", "optimizer", "spectrogram", "raw_net", "img_net"},
                     "");
  try {
    if (j.contains("mode")) c.mode = train_mode_from_string(j.at("mode").get<std::string>());
    get_if(j, "dataset", c.dataset_id);
    get_if(j, "subject", c.subject_id);
    get_if(j, "n_classes", c.n_classes);
    get_if(j, "seed", c.seed);
    get_if(j, "batch_size", c.batch_size);
    get_if(j, "max_epochs", c.max_epochs);
    get_if(j, "eval_batch_size", c.eval_batch_size);
    get_if(j, "align", c.align);
    if (j.contains("fusion")) {
      const auto& f = j.at("fusion");
      detail::check_keys(f, {"freq_weight", "mmd_weight", "bandwidth_multipliers", "softmax_axis", "fuse_normalized"},
                         "fusion");
      get_if(f, "freq_weight", c.fusion.freq_weight);
      get_if(f, "mmd_weight", c.fusion.mmd_weight);
      get_if(f, "bandwidth_multipliers", c.fusion.bandwidth_multipliers);
      get_if(f, "fuse_normalized", c.fusion.fuse_normalized);
      if (f.contains("softmax_axis")) {
        const auto s = f.at("softmax_axis").get<std::string>();
        if (s != "feature" && s != "batch") throw ArgumentError("config: softmax_axis must be feature|batch");
        c.fusion.softmax_axis = s == "feature" ? SoftmaxAxis::kFeature : SoftmaxAxis::kBatch;
      }
    }
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      detail::check_keys(o, {"lr", "beta1", "beta2", "eps", "weight_decay"}, "optimizer");
      get_if(o, "lr", c.optimizer.lr);
      get_if(o, "beta1", c.optimizer.beta1);
      get_if(o, "beta2", c.optimizer.beta2);
      get_if(o, "eps", c.optimizer.eps);
      get_if(o, "weight_decay", c.optimizer.weight_decay);
    }
    if (j.contains("spectrogram")) {
      const auto& s = j.at("spectrogram");
      detail::check_keys(s, {"beta", "f_lo", "f_hi", "n_freqs", "stitch", "size", "render_height", "render_width"},
                         "spectrogram");
      double beta = c.spectrogram.cwt.beta, lo = c.spectrogram.cwt.freqs.front(), hi = c.spectrogram.cwt.freqs.back();
      std::size_t n = c.spectrogram.cwt.freqs.size();
      get_if(s, "beta", beta);
      get_if(s, "f_lo", lo);
      get_if(s, "f_hi", hi);
      get_if(s, "n_freqs", n);
      if (n == 0) throw ArgumentError("config: spectrogram.n_freqs must be positive");
      c.spectrogram.cwt = CwtSpec::linear(lo, hi, n, beta);
      if (s.contains("stitch")) c.spectrogram.stitch = stitch_mode_from_string(s.at("stitch").get<std::string>());
      get_if(s, "size", c.spectrogram.size);
      get_if(s, "render_height", c.spectrogram.render_height);
      get_if(s, "render_width", c.spectrogram.render_width);
    }
    if (j.contains("raw_net")) {
      const auto& r = j.at("raw_net");
      detail::check_keys(r,
                         {"depth", "temporal_kernel", "depth1", "depth2", "attention_kernel", "pooling", "pool_bins",
                          "pool_width", "dropout"},
                         "raw_net");
      get_if(r, "depth", c.raw.depth);
      get_if(r, "temporal_kernel", c.raw.temporal_kernel);
      get_if(r, "depth1", c.raw.depth1);
      get_if(r, "depth2", c.raw.depth2);
      get_if(r, "attention_kernel", c.raw.attention_kernel);
      get_if(r, "pool_bins", c.raw.pool_bins);
      get_if(r, "pool_width", c.raw.pool_width);
      get_if(r, "dropout", c.raw.dropout_p);
      if (r.contains("pooling")) {
        const auto p = r.at("pooling").get<std::string>();
        if (p != "adaptive" && p != "fixed") throw ArgumentError("config: raw_net.pooling must be adaptive|fixed");
        c.raw.pooling = p == "adaptive" ? RawPooling::kAdaptive : RawPooling::kFixed;
      }
    }
    if (j.contains("img_net")) {
      const auto& m = j.at("img_net");
      detail::check_keys(m, {"feature_channels_last", "dropout"}, "img_net");
      get_if(m, "feature_channels_last", c.img.feature_channels_last);
      get_if(m, "dropout", c.img.dropout_p);
    }
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config: ") + e.what());
  }
  c.raw.n_classes = c.img.n_classes = c.n_classes;
  c.img.input_size = c.spectrogram.size;
  c.img.in_channels = c.spectrogram.image_channels(c.raw.channels);
  return c;
}

inline TsffConfig config_from_json(const json& j) { return apply_json(TsffConfig{}, j); }

// Built-in presets; the same documents ship as configs/<name>.json.
inline json preset_json(const std::string& name) {
  if (name == "defaults_2a_binary")
    return {{"dataset", "2a"}, {"n_classes", 2}, {"fusion", {{"freq_weight", 0.001}, {"mmd_weight", 0.0}}}};
  if (name == "defaults_2a_4class")
    return {{"dataset", "2a"}, {"n_classes", 4}, {"fusion", {{"freq_weight", 0.01}, {"mmd_weight", 0.1}}}};
  if (name == "defaults_2b")
    return {{"dataset", "2b"}, {"n_classes", 2}, {"fusion", {{"freq_weight", 0.001}, {"mmd_weight", 1.0}}}};
  if (name == "synthetic")
    return {{"dataset", "synthetic"},
            {"n_classes", 2},
            {"max_epochs", 100},
            {"fusion", {{"freq_weight", 0.01}, {"mmd_weight", 0.1}}}};
  throw ArgumentError("unknown preset '" + name + "' (defaults_2a_binary|defaults_2a_4class|defaults_2b|synthetic)");
}

inline std::vector<std::string> preset_names() {
  return {"defaults_2a_binary", "defaults_2a_4class", "defaults_2b", "synthetic"};
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// Accepts a preset name or a path to a JSON file.
inline TsffConfig load_config(const std::string& name_or_path) {
  if (std::filesystem::exists(name_or_path)) return config_from_json(read_json_file(name_or_path));
  return config_from_json(preset_json(name_or_path));
}

}  // namespace tsff
