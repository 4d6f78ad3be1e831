#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "tsff/error.hpp"
#include "tsff/random.hpp"

namespace tsff {

inline const std::vector<std::string> kMotorChannels = {"C3", "Cz", "C4"};

// Segmented trials, stored trial-major, then channel-major, then time.
struct TrialSet {
  std::size_t n_trials = 0;
  std::size_t n_channels = 0;
  std::size_t n_samples = 0;
  std::size_t n_classes = 0;
  float fs = 0.0f;
  std::vector<float> data;
  std::vector<std::uint32_t> labels;
  std::vector<std::string> channels;
  std::string dataset_id;
  std::string subject_id;

  std::size_t trial_size() const { return n_channels * n_samples; }

  std::span<float> trial(std::size_t i) { return {data.data() + i * trial_size(), trial_size()}; }
  std::span<const float> trial(std::size_t i) const {
    return {data.data() + i * trial_size(), trial_size()};
  }
  std::span<float> channel(std::size_t i, std::size_t c) {
    return {data.data() + i * trial_size() + c * n_samples, n_samples};
  }
  std::span<const float> channel(std::size_t i, std::size_t c) const {
    return {data.data() + i * trial_size() + c * n_samples, n_samples};
  }

  // Same metadata, no trials.
  TrialSet empty_like() const {
    TrialSet out = *this;
    out.n_trials = 0;
    out.data.clear();
    out.labels.clear();
    return out;
  }

  TrialSet subset(std::span<const std::size_t> indices) const {
    TrialSet out = empty_like();
    out.n_trials = indices.size();
    out.data.reserve(indices.size() * trial_size());
    for (std::size_t i : indices) {
      auto t = trial(i);
      out.data.insert(out.data.end(), t.begin(), t.end());
      out.labels.push_back(labels[i]);
    }
    return out;
  }

  // Trials with label < m, relabelled as an m-class set (e.g. left/right hand of a 4-class session).
  TrialSet first_classes(std::size_t m) const {
    if (m < 2 || m > n_classes) throw ArgumentError("TrialSet: cannot keep " + std::to_string(m) + " of " + std::to_string(n_classes) + " classes");
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n_trials; ++i)
      if (labels[i] < m) keep.push_back(i);
    TrialSet out = subset(keep);
    out.n_classes = m;
    return out;
  }

  void validate() const {
    if (n_trials != labels.size()) throw ArgumentError("TrialSet: N != len(labels)");
    if (n_channels != channels.size()) throw ArgumentError("TrialSet: C != len(channels)");
    if (n_trials > 0 && n_samples == 0) throw ArgumentError("TrialSet: T must be positive");
    if (data.size() != n_trials * n_channels * n_samples)
      throw ArgumentError("TrialSet: data size != N*C*T");
    if (n_classes == 0 && n_trials > 0) throw ArgumentError("TrialSet: M must be positive");
    for (auto l : labels)
      if (l >= n_classes) throw ArgumentError("TrialSet: label outside [0, M)");
    if (!(fs > 0.0f) || !std::isfinite(fs)) throw ArgumentError("TrialSet: fs must be positive");
  }

  // The networks are built for the (C3, Cz, C4) montage.
  void require_motor_montage() const {
    if (channels != kMotorChannels)
      throw ArgumentError("expected channels (C3, Cz, C4) in that order");
  }
};

// Continuous multichannel recording with cue onsets, before segmentation.
struct Recording {
  struct Cue {
    std::uint64_t sample = 0;
    std::uint32_t label = 0;
  };

  std::size_t n_channels = 0;
  std::size_t n_samples = 0;
  std::size_t n_classes = 0;
  float fs = 0.0f;
  std::vector<float> data;  // channel-major: C x L
  std::vector<Cue> cues;
  std::vector<std::string> channels;
  std::string dataset_id;
  std::string subject_id;

  std::span<float> channel(std::size_t c) { return {data.data() + c * n_samples, n_samples}; }
  std::span<const float> channel(std::size_t c) const {
    return {data.data() + c * n_samples, n_samples};
  }

  void validate() const {
    if (n_channels != channels.size()) throw ArgumentError("Recording: C != len(channels)");
    if (data.size() != n_channels * n_samples) throw ArgumentError("Recording: data size != C*L");
    if (!(fs > 0.0f)) throw ArgumentError("Recording: fs must be positive");
    for (const auto& cue : cues) {
      if (cue.label >= n_classes) throw ArgumentError("Recording: cue label outside [0, M)");
      if (cue.sample >= n_samples) throw ArgumentError("Recording: cue beyond recording end");
    }
  }
};

namespace archive {

inline constexpr std::array<char, 4> kTrialMagic = {'T', 'S', 'F', 'F'};
inline constexpr std::array<char, 4> kRecordingMagic = {'T', 'S', 'F', 'R'};
inline constexpr std::uint16_t kVersion = 1;

namespace detail {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  template <typename U>
  void le(U v) {
    static_assert(std::is_integral_v<U>);
    for (std::size_t i = 0; i < sizeof(U); ++i)
      buf_.push_back(static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  void str(const std::string& s) {
    if (s.size() > 0xFFFF) throw ArgumentError("archive: string longer than 65535 bytes");
    le(static_cast<std::uint16_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void f32_block(std::span<const float> v) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(v.data(), v.size() * sizeof(float));
    } else {
      for (float x : v) f32(x);
    }
  }
  std::size_t size() const { return buf_.size(); }
  std::vector<unsigned char>& buffer() { return buf_; }
  void patch_u64(std::size_t at, std::uint64_t v) {
    for (std::size_t i = 0; i < 8; ++i) buf_[at + i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<unsigned char> buf) : buf_(std::move(buf)) {}

  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw FormatError("archive: header truncated");
  }
  template <typename U>
  U le() {
    need(sizeof(U));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  std::string str() {
    const auto n = le<std::uint16_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::array<char, 4> magic() {
    need(4);
    std::array<char, 4> m{};
    std::memcpy(m.data(), buf_.data() + pos_, 4);
    pos_ += 4;
    return m;
  }
  std::vector<float> f32_block(std::size_t offset, std::size_t count) const {
    std::vector<float> out(count);
    const auto* src = buf_.data() + offset;
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), src, count * sizeof(float));
    } else {
      for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t v = 0;
        for (std::size_t b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(src[4 * i + b]) << (8 * b);
        out[i] = std::bit_cast<float>(v);
      }
    }
    return out;
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return buf_.size(); }
  const unsigned char* data() const { return buf_.data(); }

 private:
  std::vector<unsigned char> buf_;
  std::size_t pos_ = 0;
};

inline std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void dump(const std::filesystem::path& path, const std::vector<unsigned char>& buf) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("write failed: " + path.string());
}

inline void check_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) throw ArgumentError(std::string("archive: ") + what + " exceeds u32");
}

}  // namespace detail

// Layout (all little-endian):
//   0  magic "TSFF"      4  u16 version     6  u16 reserved
//   8  f32 fs           12  u32 N  16 u32 C  20 u32 T  24 u32 M
//  28  u64 data offset  36  N x u32 labels
//  then C channel names, dataset id, subject id (each u16 length + bytes)
//  data offset: N*C*T f32 samples, trial-major, channel-major, time.
inline std::vector<unsigned char> encode_trials(const TrialSet& trials) {
  trials.validate();
  detail::check_u32(trials.n_trials, "N");
  detail::check_u32(trials.n_channels, "C");
  detail::check_u32(trials.n_samples, "T");
  detail::check_u32(trials.n_classes, "M");
  detail::Writer w;
  w.bytes(kTrialMagic.data(), 4);
  w.le(kVersion);
  w.le(std::uint16_t{0});
  w.f32(trials.fs);
  w.le(static_cast<std::uint32_t>(trials.n_trials));
  w.le(static_cast<std::uint32_t>(trials.n_channels));
  w.le(static_cast<std::uint32_t>(trials.n_samples));
  w.le(static_cast<std::uint32_t>(trials.n_classes));
  const std::size_t offset_at = w.size();
  w.le(std::uint64_t{0});
  for (auto l : trials.labels) w.le(l);
  for (const auto& ch : trials.channels) w.str(ch);
  w.str(trials.dataset_id);
  w.str(trials.subject_id);
  w.patch_u64(offset_at, w.size());
  w.f32_block(trials.data);
  return std::move(w.buffer());
}

inline TrialSet decode_trials(std::vector<unsigned char> bytes) {
  detail::Reader r(std::move(bytes));
  if (r.size() < 4 || r.magic() != kTrialMagic) throw FormatError("archive: bad magic (expected TSFF)");
  const auto version = r.le<std::uint16_t>();
  if (version != kVersion)
    throw UnsupportedVersionError("archive: unsupported version " + std::to_string(version));
  r.le<std::uint16_t>();
  TrialSet t;
  t.fs = r.f32();
  t.n_trials = r.le<std::uint32_t>();
  t.n_channels = r.le<std::uint32_t>();
  t.n_samples = r.le<std::uint32_t>();
  t.n_classes = r.le<std::uint32_t>();
  const auto offset = r.le<std::uint64_t>();
  t.labels.resize(t.n_trials);
  for (auto& l : t.labels) l = r.le<std::uint32_t>();
  t.channels.resize(t.n_channels);
  for (auto& ch : t.channels) ch = r.str();
  t.dataset_id = r.str();
  t.subject_id = r.str();
  if (offset != r.pos()) throw FormatError("archive: data offset does not follow header");
  const std::size_t count = t.n_trials * t.n_channels * t.n_samples;
  const std::size_t expected = offset + count * sizeof(float);
  if (r.size() < expected) throw CorruptionError("archive: data block truncated");
  if (r.size() > expected) throw FormatError("archive: trailing bytes after data block");
  t.data = r.f32_block(offset, count);
  try {
    t.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("archive: ") + e.what());
  }
  return t;
}

inline std::size_t header_size(const TrialSet& trials) {
  std::size_t n = 36 + 4 * trials.n_trials;
  for (const auto& ch : trials.channels) n += 2 + ch.size();
  return n + 4 + trials.dataset_id.size() + trials.subject_id.size();
}

// Layout mirrors the trial archive with magic "TSFR": header fields are
// fs, C, L (u64), cue count, M, data offset (u64), then cues as (u64 sample,
// u32 label), names and ids; data is C x L f32, channel-major.
inline std::vector<unsigned char> encode_recording(const Recording& rec) {
  rec.validate();
  detail::check_u32(rec.n_channels, "C");
  detail::check_u32(rec.cues.size(), "cue count");
  detail::check_u32(rec.n_classes, "M");
  detail::Writer w;
  w.bytes(kRecordingMagic.data(), 4);
  w.le(kVersion);
  w.le(std::uint16_t{0});
  w.f32(rec.fs);
  w.le(static_cast<std::uint32_t>(rec.n_channels));
  w.le(static_cast<std::uint64_t>(rec.n_samples));
  w.le(static_cast<std::uint32_t>(rec.cues.size()));
  w.le(static_cast<std::uint32_t>(rec.n_classes));
  const std::size_t offset_at = w.size();
  w.le(std::uint64_t{0});
  for (const auto& cue : rec.cues) {
    w.le(cue.sample);
    w.le(cue.label);
  }
  for (const auto& ch : rec.channels) w.str(ch);
  w.str(rec.dataset_id);
  w.str(rec.subject_id);
  w.patch_u64(offset_at, w.size());
  w.f32_block(rec.data);
  return std::move(w.buffer());
}

inline Recording decode_recording(std::vector<unsigned char> bytes) {
  detail::Reader r(std::move(bytes));
  if (r.size() < 4 || r.magic() != kRecordingMagic)
    throw FormatError("recording: bad magic (expected TSFR)");
  const auto version = r.le<std::uint16_t>();
  if (version != kVersion)
    throw UnsupportedVersionError("recording: unsupported version " + std::to_string(version));
  r.le<std::uint16_t>();
  Recording rec;
  rec.fs = r.f32();
  rec.n_channels = r.le<std::uint32_t>();
  rec.n_samples = r.le<std::uint64_t>();
  const auto n_cues = r.le<std::uint32_t>();
  rec.n_classes = r.le<std::uint32_t>();
  const auto offset = r.le<std::uint64_t>();
  rec.cues.resize(n_cues);
  for (auto& cue : rec.cues) {
    cue.sample = r.le<std::uint64_t>();
    cue.label = r.le<std::uint32_t>();
  }
  rec.channels.resize(rec.n_channels);
  for (auto& ch : rec.channels) ch = r.str();
  rec.dataset_id = r.str();
  rec.subject_id = r.str();
  if (offset != r.pos()) throw FormatError("recording: data offset does not follow header");
  const std::size_t count = rec.n_channels * rec.n_samples;
  const std::size_t expected = offset + count * sizeof(float);
  if (r.size() < expected) throw CorruptionError("recording: data block truncated");
  if (r.size() > expected) throw FormatError("recording: trailing bytes after data block");
  rec.data = r.f32_block(offset, count);
  try {
    rec.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("recording: ") + e.what());
  }
  return rec;
}

}  // namespace archive

inline void write_archive(const TrialSet& trials, const std::filesystem::path& path) {
  archive::detail::dump(path, archive::encode_trials(trials));
}

inline TrialSet read_archive(const std::filesystem::path& path) {
  return archive::decode_trials(archive::detail::slurp(path));
}

inline void write_recording(const Recording& rec, const std::filesystem::path& path) {
  archive::detail::dump(path, archive::encode_recording(rec));
}

inline Recording read_recording(const std::filesystem::path& path) {
  return archive::decode_recording(archive::detail::slurp(path));
}

struct SynthOptions {
  std::size_t n_per_class = 30;
  std::size_t classes = 2;
  double fs = 250.0;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  double noise = 0.5;  // white-noise std relative to unit burst amplitude
};

// Per-class burst frequency (Hz) and (C3, Cz, C4) mixing weights.
inline constexpr std::array<double, 8> kSynthFrequencies = {10, 22, 16, 28, 13, 34, 19, 25};
inline constexpr std::array<std::array<double, 3>, 4> kSynthMixing = {{
    {1.0, 0.5, 0.2},
    {0.2, 0.5, 1.0},
    {0.5, 1.0, 0.5},
    {0.8, 0.3, 0.8},
}};

// Trial i has label i % M. Each trial carries one Hann-tapered burst at its
// class frequency, spread over the montage by the class mixing weights.
inline TrialSet synthesize_trials(const SynthOptions& opt) {
  if (opt.classes < 2 || opt.classes > kSynthFrequencies.size())
    throw ArgumentError("synthesize_trials: classes must be in [2, 8]");
  if (opt.samples == 0 || opt.n_per_class == 0) throw ArgumentError("synthesize_trials: empty set");
  if (!(opt.fs > 0.0)) throw ArgumentError("synthesize_trials: fs must be positive");
  if (opt.noise < 0.0) throw ArgumentError("synthesize_trials: noise must be nonnegative");
  if (kSynthFrequencies[opt.classes - 1] * 2.0 >= opt.fs)
    throw ArgumentError("synthesize_trials: class frequency above Nyquist");

  TrialSet t;
  t.n_trials = opt.n_per_class * opt.classes;
  t.n_channels = 3;
  t.n_samples = opt.samples;
  t.n_classes = opt.classes;
  t.fs = static_cast<float>(opt.fs);
  t.channels = kMotorChannels;
  t.dataset_id = "synthetic";
  t.subject_id = "S" + std::to_string(opt.seed);
  t.data.assign(t.n_trials * 3 * opt.samples, 0.0f);
  t.labels.resize(t.n_trials);

  Rng rng(opt.seed);
  const double len = static_cast<double>(opt.samples);
  for (std::size_t i = 0; i < t.n_trials; ++i) {
    const auto label = static_cast<std::uint32_t>(i % opt.classes);
    t.labels[i] = label;
    const double freq = kSynthFrequencies[label];
    const auto& mix = kSynthMixing[label % kSynthMixing.size()];
    const double amp = rng.uniform(0.8, 1.2);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double start = std::floor(rng.uniform(0.05, 0.2) * len);
    const double width = std::floor(rng.uniform(0.6, 0.75) * len);
    for (std::size_t c = 0; c < 3; ++c) {
      auto ch = t.channel(i, c);
      for (std::size_t s = 0; s < opt.samples; ++s) {
        const double u = (static_cast<double>(s) - start) / width;
        double v = 0.0;
        if (u >= 0.0 && u <= 1.0) {
          const double env = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * u);
          v = amp * mix[c] * env *
              std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(s) / opt.fs + phase);
        }
        if (opt.noise > 0.0) v += opt.noise * rng.normal();
        ch[s] = static_cast<float>(v);
      }
    }
  }
  return t;
}

}  // namespace tsff
