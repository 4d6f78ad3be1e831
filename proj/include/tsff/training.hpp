#pragma once

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tsff/checkpoint.hpp"
#include "tsff/config.hpp"
#include "tsff/data_io.hpp"
#include "tsff/fusion.hpp"
#include "tsff/net_tsff_img.hpp"
#include "tsff/net_tsff_raw.hpp"
#include "tsff/optim.hpp"
#include "tsff/preprocess.hpp"
#include "tsff/timefreq.hpp"

namespace tsff {

// Both branches feed one shared linear head through the fused features G.
// Single-branch modes use the same head on that branch's features alone.
template <typename T>
class TsffModel {
 public:
  explicit TsffModel(const TsffConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    if (uses_raw(cfg.mode)) raw_ = std::make_unique<TsffRawNet<T>>(cfg.raw, false);
    if (uses_img(cfg.mode)) img_ = std::make_unique<TsffImgNet<T>>(cfg.img, false);
    head_ = std::make_unique<nn::Linear<T>>("head", feature_dim(), cfg.n_classes);
  }

  std::size_t feature_dim() const { return raw_ ? cfg_.raw.feature_dim() : cfg_.img.feature_dim(); }

  void init(std::uint64_t seed) {
    if (raw_) raw_->init(seed);
    if (img_) img_->init(seed);
    Rng rng = Rng::stream(seed, 0x4EAD);
    head_->init(rng);
  }

  // trials: (n, 1, C, T), images: (n, ch, size, size); either may be null
  // when the corresponding branch is inactive.
  Tensor<T> forward(const Tensor<T>* trials, const Tensor<T>* images, nn::Mode& mode) {
    if (raw_) {
      if (!trials) throw ArgumentError("TsffModel: raw branch needs trials");
      s_ = raw_->forward_features(*trials, mode);
    }
    if (img_) {
      if (!images) throw ArgumentError("TsffModel: img branch needs images");
      f_ = img_->forward_features(*images, mode);
    }
    if (raw_ && img_) {
      if (cfg_.fusion.fuse_normalized) {
        sn_ = softmax_normalize(s_, cfg_.fusion.softmax_axis);
        fn_ = softmax_normalize(f_, cfg_.fusion.softmax_axis);
        g_ = fuse_features(sn_, fn_, cfg_.fusion.freq_weight);
      } else {
        g_ = fuse_features(s_, f_, cfg_.fusion.freq_weight);
      }
    } else {
      g_ = raw_ ? s_ : f_;
    }
    return head_->forward(g_, mode);
  }

  LossResult<T> loss(const Tensor<T>& logits, std::span<const std::uint32_t> labels) const {
    FusionConfig fc = cfg_.fusion;
    fc.mmd_weight = cfg_.effective_mmd_weight();
    if (raw_ && img_) return total_loss(logits, labels, s_, f_, fc);
    fc.mmd_weight = 0.0;
    return total_loss(logits, labels, g_, g_, fc);
  }

  void backward(const LossResult<T>& L) {
    const Tensor<T> gg = head_->backward(L.grad_logits);
    if (raw_ && img_) {
      const double w = cfg_.fusion.freq_weight;
      Tensor<T> gs = scaled(gg, 1.0 - w), gf = scaled(gg, w);
      if (cfg_.fusion.fuse_normalized) {
        gs = softmax_backward(sn_, gs, cfg_.fusion.softmax_axis);
        gf = softmax_backward(fn_, gf, cfg_.fusion.softmax_axis);
      }
      if (!L.grad_s.empty()) add_into(gs, L.grad_s);
      if (!L.grad_f.empty()) add_into(gf, L.grad_f);
      raw_->backward_features(gs);
      img_->backward_features(gf);
    } else if (raw_) {
      raw_->backward_features(gg);
    } else {
      img_->backward_features(gg);
    }
  }

  std::vector<nn::Param<T>*> params() {
    std::vector<nn::Param<T>*> out;
    if (raw_) for (auto* p : raw_->params()) out.push_back(p);
    if (img_) for (auto* p : img_->params()) out.push_back(p);
    head_->params(out);
    return out;
  }

  const Tensor<T>& last_s() const { return s_; }
  const Tensor<T>& last_f() const { return f_; }
  const Tensor<T>& last_g() const { return g_; }
  const TsffConfig& config() const { return cfg_; }
  TsffRawNet<T>* raw() { return raw_.get(); }
  TsffImgNet<T>* img() { return img_.get(); }
  nn::Linear<T>& head() { return *head_; }

 private:
  static Tensor<T> scaled(const Tensor<T>& x, double a) {
    Tensor<T> y = x;
    for (auto& v : y.vec()) v = static_cast<T>(a * v);
    return y;
  }
  static void add_into(Tensor<T>& a, const Tensor<T>& b) {
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
  }

  TsffConfig cfg_;
  std::unique_ptr<TsffRawNet<T>> raw_;
  std::unique_ptr<TsffImgNet<T>> img_;
  std::unique_ptr<nn::Linear<T>> head_;
  Tensor<T> s_, f_, g_, sn_, fn_;
};

// ---------------------------------------------------------------------------
// Spectrogram cache

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xCBF29CE484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string spectrogram_cache_key(const TrialSet& trials, const SpectrogramSpec& spec) {
  std::ostringstream meta;
  meta << std::setprecision(17) << "v1|" << trials.n_trials << '|' << trials.n_channels << '|' << trials.n_samples
       << '|' << trials.fs << '|' << spec.cwt.beta << '|' << spec.cwt.center_freq << '|' << spec.cwt.support << '|';
  for (double f : spec.cwt.freqs) meta << f << ',';
  meta << '|' << to_string(spec.stitch) << '|' << spec.size << '|' << spec.render_height << '|' << spec.render_width;
  const std::string m = meta.str();
  std::uint64_t h = fnv1a(m.data(), m.size());
  h = fnv1a(trials.data.data(), trials.data.size() * sizeof(float), h);
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << h;
  return hex.str();
}

// Cache directory: explicit argument, else $TSFF_CACHE_DIR, else none.
inline std::optional<std::filesystem::path> resolve_cache_dir(const std::optional<std::filesystem::path>& explicit_dir) {
  if (explicit_dir) return explicit_dir;
  if (const char* env = std::getenv("TSFF_CACHE_DIR"); env && *env) return std::filesystem::path(env);
  return std::nullopt;
}

// <cache>/<key>.tsfs is a tensor container holding one "images" tensor.
inline SpectrogramBatch cached_spectrograms(const TrialSet& trials, const SpectrogramSpec& spec,
                                            const std::optional<std::filesystem::path>& cache_dir) {
  if (!cache_dir) return build_spectrograms(trials, spec);
  const auto path = *cache_dir / (spectrogram_cache_key(trials, spec) + ".tsfs");
  const std::size_t ch = spec.image_channels(trials.n_channels);
  if (std::filesystem::exists(path)) {
    try {
      auto ck = read_checkpoint(path);
      auto it = ck.tensors.find("images");
      if (it != ck.tensors.end() && it->second.dims() == std::array<std::size_t, 4>{trials.n_trials, ch, spec.size, spec.size})
        return SpectrogramBatch{std::move(it->second), spec.stitch, spec.size};
    } catch (const Error&) {
      // unreadable entry: rebuild below
    }
  }
  auto batch = build_spectrograms(trials, spec);
  std::filesystem::create_directories(*cache_dir);
  Checkpoint ck;
  ck.config_json = R"({"kind":"spectrograms","stitch":")" + to_string(spec.stitch) + "\"}";
  ck.tensors.emplace("images", batch.images);
  const auto tmp = path.string() + ".tmp";
  write_checkpoint(ck, tmp);
  std::filesystem::rename(tmp, path);
  return batch;
}

// ---------------------------------------------------------------------------
// Training

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0, train_ce = 0.0, train_mmd = 0.0;
  double test_accuracy = 0.0;  // fraction
  double seconds = 0.0;
};

struct RunManifest {
  json config;
  std::uint64_t seed = 0;
  std::string dataset_id, subject_id;
  std::size_t n_train = 0, n_test = 0, n_channels = 0, n_samples = 0;
  double fs = 0.0;
  std::vector<EpochRecord> epochs;
  double best_accuracy = 0.0, final_accuracy = 0.0;
  std::size_t best_epoch = 0;
  std::string checkpoint;
  std::string started_at;
  double wall_seconds = 0.0;

  std::vector<double> accuracy_curve() const {
    std::vector<double> out;
    for (const auto& e : epochs) out.push_back(e.test_accuracy);
    return out;
  }
};

inline json to_json(const RunManifest& m) {
  json epochs = json::array();
  for (const auto& e : m.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"train_ce", e.train_ce},
                      {"train_mmd", e.train_mmd},
                      {"test_accuracy", e.test_accuracy},
                      {"seconds", e.seconds}});
  return {{"config", m.config},
          {"seed", m.seed},
          {"dataset", m.dataset_id},
          {"subject", m.subject_id},
          {"data", {{"n_train", m.n_train}, {"n_test", m.n_test}, {"channels", m.n_channels}, {"samples", m.n_samples}, {"fs", m.fs}}},
          {"best_accuracy", m.best_accuracy},
          {"best_epoch", m.best_epoch},
          {"final_accuracy", m.final_accuracy},
          {"checkpoint", m.checkpoint},
          {"started_at", m.started_at},
          {"wall_seconds", m.wall_seconds},
          {"epochs", epochs}};
}

inline RunManifest manifest_from_json(const json& j) {
  try {
    RunManifest m;
    m.config = j.at("config");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.dataset_id = j.at("dataset").get<std::string>();
    m.subject_id = j.at("subject").get<std::string>();
    const auto& d = j.at("data");
    m.n_train = d.at("n_train").get<std::size_t>();
    m.n_test = d.at("n_test").get<std::size_t>();
    m.n_channels = d.at("channels").get<std::size_t>();
    m.n_samples = d.at("samples").get<std::size_t>();
    m.fs = d.at("fs").get<double>();
    m.best_accuracy = j.at("best_accuracy").get<double>();
    m.best_epoch = j.at("best_epoch").get<std::size_t>();
    m.final_accuracy = j.at("final_accuracy").get<double>();
    m.checkpoint = j.value("checkpoint", "");
    m.started_at = j.value("started_at", "");
    m.wall_seconds = j.value("wall_seconds", 0.0);
    for (const auto& e : j.at("epochs"))
      m.epochs.push_back({e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                          e.at("train_ce").get<double>(), e.at("train_mmd").get<double>(),
                          e.at("test_accuracy").get<double>(), e.value("seconds", 0.0)});
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(m).dump(2) << '\n';
}

inline RunManifest read_manifest(const std::filesystem::path& path) { return manifest_from_json(read_json_file(path)); }

// One split ready for the network: aligned trials plus (if needed) spectrograms.
struct PreparedSplit {
  TrialSet trials;
  SpectrogramBatch spectrograms;
};

// Alignment is fitted on the split itself (no labels involved), so train and
// test sessions are each whitened to identity mean covariance.
inline PreparedSplit prepare_split(const TrialSet& trials, const TsffConfig& cfg,
                                   const std::optional<std::filesystem::path>& cache_dir) {
  trials.validate();
  PreparedSplit p;
  p.trials = cfg.align ? apply_alignment(trials, fit_alignment(trials)) : trials;
  if (uses_img(cfg.mode)) p.spectrograms = cached_spectrograms(p.trials, cfg.spectrogram, cache_dir);
  return p;
}

// Resolves data-dependent fields (montage size, trial length) into the config.
inline TsffConfig bind_to_data(TsffConfig cfg, const TrialSet& trials) {
  cfg.raw.channels = trials.n_channels;
  cfg.raw.samples = trials.n_samples;
  cfg.img.in_channels = cfg.spectrogram.image_channels(trials.n_channels);
  if (trials.n_classes != cfg.n_classes)
    throw ArgumentError("data has " + std::to_string(trials.n_classes) + " classes, config expects " +
                        std::to_string(cfg.n_classes));
  return cfg;
}

template <typename T>
struct BatchTensors {
  Tensor<T> trials, images;
  std::vector<std::uint32_t> labels;
};

template <typename T>
BatchTensors<T> gather_batch(const PreparedSplit& split, std::span<const std::size_t> idx, const TsffConfig& cfg) {
  BatchTensors<T> b;
  if (uses_raw(cfg.mode)) b.trials = trials_tensor<T>(split.trials, idx);
  if (uses_img(cfg.mode)) {
    const auto& src = split.spectrograms.images;
    b.images = Tensor<T>(idx.size(), src.c(), src.h(), src.w());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto from = src.sample(idx[k]);
      std::transform(from.begin(), from.end(), b.images.sample(k).begin(), [](float v) { return static_cast<T>(v); });
    }
  }
  for (std::size_t i : idx) b.labels.push_back(split.trials.labels[i]);
  return b;
}

struct Predictions {
  std::vector<std::uint32_t> predicted;
  std::vector<std::uint32_t> labels;
  double accuracy = 0.0;
};

template <typename T>
Predictions predict(TsffModel<T>& model, const PreparedSplit& split) {
  const auto& cfg = model.config();
  Predictions out;
  nn::Mode mode{false, nullptr};
  const std::size_t n = split.trials.n_trials;
  std::size_t correct = 0;
  for (std::size_t b = 0; b < n; b += cfg.eval_batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t i = b; i < std::min(n, b + cfg.eval_batch_size); ++i) idx.push_back(i);
    auto batch = gather_batch<T>(split, idx, cfg);
    const auto logits = model.forward(batch.trials.empty() ? nullptr : &batch.trials,
                                      batch.images.empty() ? nullptr : &batch.images, mode);
    const std::size_t M = logits.stride0();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const T* z = logits.data() + k * M;
      const auto arg = static_cast<std::uint32_t>(std::max_element(z, z + M) - z);
      out.predicted.push_back(arg);
      out.labels.push_back(batch.labels[k]);
      correct += arg == batch.labels[k];
    }
  }
  out.accuracy = n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
  return out;
}

struct TrainOptions {
  std::optional<std::filesystem::path> cache_dir;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  RunManifest manifest;
  Checkpoint checkpoint;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename T>
Checkpoint make_checkpoint(TsffModel<T>& model, const TrialSet& shape_ref) {
  Checkpoint ck;
  json meta = {{"config", to_json(model.config())},
               {"input", {{"channels", shape_ref.n_channels}, {"samples", shape_ref.n_samples}, {"fs", shape_ref.fs}}}};
  ck.config_json = meta.dump();
  store_params(ck, model.params());
  return ck;
}

// Mini-batch AdamW training; test accuracy is measured after every epoch with
// dropout off and batch norm on running statistics.
inline TrainResult train(const TrialSet& train_set, const TrialSet& test_set, const TsffConfig& base_cfg,
                         const TrainOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const TsffConfig cfg = bind_to_data(base_cfg, train_set);
  cfg.validate();
  if (test_set.n_channels != train_set.n_channels || test_set.n_samples != train_set.n_samples)
    throw ArgumentError("train/test trial shapes differ");
  if (train_set.n_trials < 2) throw ArgumentError("train: need at least two training trials");

  const auto cache = resolve_cache_dir(opt.cache_dir);
  const PreparedSplit tr = prepare_split(train_set, cfg, cache);
  const PreparedSplit te = prepare_split(test_set, cfg, cache);

  TsffModel<float> model(cfg);
  model.init(cfg.seed);
  AdamW<float> optim(model.params(), cfg.optimizer);
  Rng shuffle_rng = Rng::stream(cfg.seed, 1);
  Rng dropout_rng = Rng::stream(cfg.seed, 2);

  RunManifest man;
  man.config = to_json(cfg);
  man.seed = cfg.seed;
  man.dataset_id = cfg.dataset_id;
  man.subject_id = cfg.subject_id;
  man.n_train = train_set.n_trials;
  man.n_test = test_set.n_trials;
  man.n_channels = train_set.n_channels;
  man.n_samples = train_set.n_samples;
  man.fs = train_set.fs;
  man.started_at = utc_timestamp();

  const std::size_t n = train_set.n_trials;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto e0 = std::chrono::steady_clock::now();
    const auto order = shuffle_rng.permutation(n);
    double sum_loss = 0.0, sum_ce = 0.0, sum_mmd = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < n; b += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, n - b);
      if (len < 2) continue;  // a lone trailing trial gives no batch statistics
      const std::span<const std::size_t> idx(order.data() + b, len);
      auto batch = gather_batch<float>(tr, idx, cfg);
      nn::Mode mode{true, &dropout_rng};
      optim.zero_grad();
      const auto logits = model.forward(batch.trials.empty() ? nullptr : &batch.trials,
                                        batch.images.empty() ? nullptr : &batch.images, mode);
      const auto L = model.loss(logits, batch.labels);
      if (!std::isfinite(L.total)) throw DivergenceError(epoch, "non-finite training loss");
      model.backward(L);
      optim.step();
      sum_loss += L.total * static_cast<double>(len);
      sum_ce += L.ce * static_cast<double>(len);
      sum_mmd += L.mmd * static_cast<double>(len);
      seen += len;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = sum_loss / static_cast<double>(seen);
    rec.train_ce = sum_ce / static_cast<double>(seen);
    rec.train_mmd = sum_mmd / static_cast<double>(seen);
    rec.test_accuracy = predict(model, te).accuracy;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - e0).count();
    man.epochs.push_back(rec);
    if (rec.test_accuracy > man.best_accuracy || epoch == 1) {
      man.best_accuracy = rec.test_accuracy;
      man.best_epoch = epoch;
    }
    if (opt.on_epoch) opt.on_epoch(rec);
  }
  man.final_accuracy = man.epochs.back().test_accuracy;
  man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(man), make_checkpoint(model, train_set)};
}

struct EvalResult {
  double accuracy = 0.0;
  Predictions predictions;
};

// Rebuilds the model from a checkpoint and scores test_set.
inline EvalResult evaluate(const Checkpoint& ck, const TrialSet& test_set,
                           const std::optional<std::filesystem::path>& cache_dir = std::nullopt) {
  json meta;
  try {
    meta = json::parse(ck.config_json);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  const TsffConfig cfg = bind_to_data(config_from_json(meta.at("config")), test_set);
  const auto& in = meta.at("input");
  if (in.at("channels").get<std::size_t>() != test_set.n_channels ||
      in.at("samples").get<std::size_t>() != test_set.n_samples)
    throw ArgumentError("evaluate: checkpoint expects " + std::to_string(in.at("channels").get<std::size_t>()) + "x" +
                        std::to_string(in.at("samples").get<std::size_t>()) + " trials, test set has " +
                        std::to_string(test_set.n_channels) + "x" + std::to_string(test_set.n_samples));
  TsffModel<float> model(cfg);
  load_params(ck, model.params());
  const auto split = prepare_split(test_set, cfg, resolve_cache_dir(cache_dir));
  EvalResult r;
  r.predictions = predict(model, split);
  r.accuracy = r.predictions.accuracy;
  return r;
}

}  // namespace tsff
