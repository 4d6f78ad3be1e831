#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tsff/colormap_data.hpp"
#include "tsff/data_io.hpp"
#include "tsff/error.hpp"
#include "tsff/tensor.hpp"

namespace tsff {

struct CwtSpec {
  double beta = 1.0;
  std::vector<double> freqs;
  // Wavelet centre frequency in cycles per unit of its argument (cos(pi t) -> 0.5).
  double center_freq = 0.5;
  // Kernel truncated where the Gaussian envelope argument exceeds this many 1/beta units.
  double support = 8.0;

  static CwtSpec linear(double f_lo = 4.0, double f_hi = 38.0, std::size_t n = 69, double beta = 1.0) {
    CwtSpec s;
    s.beta = beta;
    s.freqs.resize(n);
    for (std::size_t k = 0; k < n; ++k)
      s.freqs[k] = n == 1 ? f_lo : f_lo + (f_hi - f_lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    return s;
  }

  void validate() const {
    if (!(beta > 0.0)) throw ArgumentError("CwtSpec: beta must be positive");
    if (freqs.empty()) throw ArgumentError("CwtSpec: no frequencies");
    if (!(freqs.front() > 0.0)) throw ArgumentError("CwtSpec: frequencies must be positive");
    for (std::size_t k = 1; k < freqs.size(); ++k)
      if (!(freqs[k] > freqs[k - 1])) throw ArgumentError("CwtSpec: frequencies must be strictly increasing");
  }

  void validate_band(double f_lo, double f_hi) const {
    validate();
    if (freqs.front() < f_lo - 1e-9 || freqs.back() > f_hi + 1e-9)
      throw ArgumentError("CwtSpec: frequencies outside the filter passband");
  }

  // Dilation in samples for analysis frequency f.
  double scale(double f, double fs) const { return center_freq * fs / f; }
};

// psi(t) = exp(-beta^2 t^2 / 2) cos(pi t)
inline double morlet(double t, double beta) {
  return std::exp(-0.5 * beta * beta * t * t) * std::cos(std::numbers::pi * t);
}

inline std::vector<double> morlet_wavelet(std::span<const double> t, double beta) {
  if (!(beta > 0.0)) throw ArgumentError("morlet_wavelet: beta must be positive");
  std::vector<double> out(t.size());
  std::transform(t.begin(), t.end(), out.begin(), [beta](double v) { return morlet(v, beta); });
  return out;
}

// Row-major rows x cols matrix of doubles.
struct PowerMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Sampled kernel psi((j - half)/a)/sqrt(a), j = 0..2*half, for one analysis frequency.
inline std::vector<double> cwt_kernel(double f, double fs, const CwtSpec& spec) {
  const double a = spec.scale(f, fs);
  const auto half = static_cast<std::size_t>(std::floor(spec.support * a / spec.beta));
  std::vector<double> k(2 * half + 1);
  const double norm = 1.0 / std::sqrt(a);
  for (std::size_t j = 0; j < k.size(); ++j)
    k[j] = norm * morlet((static_cast<double>(j) - static_cast<double>(half)) / a, spec.beta);
  return k;
}

// |CWT(a_k, b)|^2 for every analysis frequency k and sample b, with the
// integral taken over samples (dt = 1 sample) and zero signal outside [0, T).
template <typename Sample>
PowerMatrix cwt_scalogram(std::span<const Sample> signal, double fs, const CwtSpec& spec) {
  spec.validate();
  if (!(fs > 0.0)) throw ArgumentError("cwt_scalogram: fs must be positive");
  const std::size_t T = signal.size();
  std::vector<double> s(T);
  for (std::size_t i = 0; i < T; ++i) {
    s[i] = static_cast<double>(signal[i]);
    if (!std::isfinite(s[i])) throw NumericError("cwt_scalogram: non-finite sample");
  }
  PowerMatrix out{spec.freqs.size(), T, std::vector<double>(spec.freqs.size() * T)};
  for (std::size_t r = 0; r < spec.freqs.size(); ++r) {
    const auto kernel = cwt_kernel(spec.freqs[r], fs, spec);
    if (kernel.size() > T)
      throw ScaleSupportError("cwt_scalogram: wavelet at " + std::to_string(spec.freqs[r]) + " Hz spans " +
                              std::to_string(kernel.size()) + " samples, signal has " + std::to_string(T));
    const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    const auto n = static_cast<std::ptrdiff_t>(T);
    for (std::ptrdiff_t b = 0; b < n; ++b) {
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, b - half);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, b + half);
      double acc = 0.0;
      const double* kp = kernel.data() + (half - b);
      for (std::ptrdiff_t i = lo; i <= hi; ++i) acc += s[static_cast<std::size_t>(i)] * kp[i];
      out.at(r, static_cast<std::size_t>(b)) = acc * acc;
    }
  }
  return out;
}

// Channel-major float image (c, h, w).
struct Image {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;

  Image() = default;
  Image(std::size_t c, std::size_t h, std::size_t w, float fill = 0.0f)
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  float& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
  float at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * height + y) * width + x]; }
  bool same_shape(const Image& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

namespace detail {

// Half-pixel-centre source coordinate for destination index i.
inline void bilinear_source(std::size_t i, std::size_t dst, std::size_t src, std::size_t& i0, std::size_t& i1,
                            double& frac) {
  double u = (static_cast<double>(i) + 0.5) * static_cast<double>(src) / static_cast<double>(dst) - 0.5;
  u = std::clamp(u, 0.0, static_cast<double>(src - 1));
  i0 = static_cast<std::size_t>(std::floor(u));
  i1 = std::min(i0 + 1, src - 1);
  frac = u - static_cast<double>(i0);
}

}  // namespace detail

inline constexpr std::size_t kRenderHeight = 600;
inline constexpr std::size_t kRenderWidth = 800;

// Min-max normalize power, resample onto an H x W raster (frequency increasing
// upward, time to the right) and map through the viridis table.
inline Image render_spectrogram(const PowerMatrix& power, std::size_t height = kRenderHeight,
                                std::size_t width = kRenderWidth) {
  if (power.rows == 0 || power.cols == 0) throw ArgumentError("render_spectrogram: empty power matrix");
  if (height == 0 || width == 0) throw ArgumentError("render_spectrogram: empty raster");
  double lo = power.data[0];
  double hi = power.data[0];
  for (double v : power.data) {
    if (v < 0.0 || !std::isfinite(v)) throw ArgumentError("render_spectrogram: power must be finite and nonnegative");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double range = hi - lo;

  std::vector<std::size_t> c0(width), c1(width);
  std::vector<double> cf(width);
  for (std::size_t x = 0; x < width; ++x) detail::bilinear_source(x, width, power.cols, c0[x], c1[x], cf[x]);

  Image img(3, height, width);
  for (std::size_t y = 0; y < height; ++y) {
    std::size_t r0 = 0, r1 = 0;
    double rf = 0.0;
    detail::bilinear_source(height - 1 - y, height, power.rows, r0, r1, rf);
    for (std::size_t x = 0; x < width; ++x) {
      std::size_t idx = 0;
      if (range > 0.0) {
        const double top = power.at(r0, c0[x]) * (1.0 - cf[x]) + power.at(r0, c1[x]) * cf[x];
        const double bot = power.at(r1, c0[x]) * (1.0 - cf[x]) + power.at(r1, c1[x]) * cf[x];
        const double v = ((top * (1.0 - rf) + bot * rf) - lo) / range;
        idx = std::min<std::size_t>(255, static_cast<std::size_t>(std::max(0.0, v) * 256.0));
      }
      for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = kViridis[idx][c];
    }
  }
  return img;
}

enum class StitchMode { kWidthwise, kLengthwise, kDepthwise };

inline std::string to_string(StitchMode m) {
  switch (m) {
    case StitchMode::kWidthwise: return "widthwise";
    case StitchMode::kLengthwise: return "lengthwise";
    case StitchMode::kDepthwise: return "depthwise";
  }
  return "?";
}

inline StitchMode stitch_mode_from_string(const std::string& s) {
  if (s == "widthwise" || s == "W") return StitchMode::kWidthwise;
  if (s == "lengthwise" || s == "L") return StitchMode::kLengthwise;
  if (s == "depthwise" || s == "D") return StitchMode::kDepthwise;
  throw ArgumentError("unknown stitch mode: " + s);
}

// Widthwise: side by side in channel order; lengthwise: stacked top to bottom;
// depthwise: concatenated along the colour axis.
inline Image stitch_channels(std::span<const Image> images, StitchMode mode) {
  if (images.empty()) throw ArgumentError("stitch_channels: no images");
  for (const auto& im : images)
    if (!im.same_shape(images[0])) throw ArgumentError("stitch_channels: image shapes differ");
  const std::size_t k = images.size();
  const auto& first = images[0];
  const std::size_t C = first.channels, H = first.height, W = first.width;
  switch (mode) {
    case StitchMode::kWidthwise: {
      Image out(C, H, k * W);
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t y = 0; y < H; ++y)
            std::copy_n(&images[i].data[(c * H + y) * W], W, &out.at(c, y, i * W));
      return out;
    }
    case StitchMode::kLengthwise: {
      Image out(C, k * H, W);
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t c = 0; c < C; ++c)
          std::copy_n(&images[i].data[c * H * W], H * W, &out.at(c, i * H, 0));
      return out;
    }
    case StitchMode::kDepthwise: {
      Image out(k * C, H, W);
      for (std::size_t i = 0; i < k; ++i) std::copy(images[i].data.begin(), images[i].data.end(),
                                                    out.data.begin() + static_cast<std::ptrdiff_t>(i * C * H * W));
      return out;
    }
  }
  throw ArgumentError("stitch_channels: bad mode");
}

inline Image resize_image(const Image& img, std::size_t target_h, std::size_t target_w) {
  if (target_h == 0 || target_w == 0) throw ArgumentError("resize_image: target must be positive");
  if (img.height == 0 || img.width == 0) throw ArgumentError("resize_image: empty image");
  std::vector<std::size_t> x0(target_w), x1(target_w);
  std::vector<double> xf(target_w);
  for (std::size_t x = 0; x < target_w; ++x) detail::bilinear_source(x, target_w, img.width, x0[x], x1[x], xf[x]);
  Image out(img.channels, target_h, target_w);
  for (std::size_t y = 0; y < target_h; ++y) {
    std::size_t y0 = 0, y1 = 0;
    double yf = 0.0;
    detail::bilinear_source(y, target_h, img.height, y0, y1, yf);
    for (std::size_t c = 0; c < img.channels; ++c)
      for (std::size_t x = 0; x < target_w; ++x) {
        const double top = img.at(c, y0, x0[x]) * (1.0 - xf[x]) + img.at(c, y0, x1[x]) * xf[x];
        const double bot = img.at(c, y1, x0[x]) * (1.0 - xf[x]) + img.at(c, y1, x1[x]) * xf[x];
        out.at(c, y, x) = static_cast<float>(std::clamp(top * (1.0 - yf) + bot * yf, 0.0, 1.0));
      }
  }
  return out;
}

inline Image resize_image(const Image& img, std::size_t target) { return resize_image(img, target, target); }

struct SpectrogramSpec {
  CwtSpec cwt = CwtSpec::linear();
  StitchMode stitch = StitchMode::kWidthwise;
  std::size_t render_height = kRenderHeight;
  std::size_t render_width = kRenderWidth;
  std::size_t size = 224;

  std::size_t image_channels(std::size_t n_eeg_channels) const {
    return stitch == StitchMode::kDepthwise ? 3 * n_eeg_channels : 3;
  }
};

struct SpectrogramBatch {
  Tensor<float> images;  // N x (3 or 9) x size x size
  StitchMode stitch = StitchMode::kWidthwise;
  std::size_t size = 0;
};

inline Image trial_spectrogram(const TrialSet& trials, std::size_t i, const SpectrogramSpec& spec) {
  std::vector<Image> per_channel;
  per_channel.reserve(trials.n_channels);
  for (std::size_t c = 0; c < trials.n_channels; ++c) {
    const auto power = cwt_scalogram(trials.channel(i, c), trials.fs, spec.cwt);
    per_channel.push_back(render_spectrogram(power, spec.render_height, spec.render_width));
  }
  return resize_image(stitch_channels(per_channel, spec.stitch), spec.size);
}

inline SpectrogramBatch build_spectrograms(const TrialSet& trials, const SpectrogramSpec& spec) {
  const std::size_t ch = spec.image_channels(trials.n_channels);
  SpectrogramBatch batch{Tensor<float>(trials.n_trials, ch, spec.size, spec.size), spec.stitch, spec.size};
  for (std::size_t i = 0; i < trials.n_trials; ++i) {
    const auto img = trial_spectrogram(trials, i, spec);
    std::copy(img.data.begin(), img.data.end(), batch.images.sample(i).begin());
  }
  return batch;
}

// Portable float map: lossless 32-bit RGB (3 channels) or grey (1 channel).
inline void write_pfm(const std::filesystem::path& path, const Image& img) {
  if (img.channels != 3 && img.channels != 1) throw ArgumentError("write_pfm: need 1 or 3 channels");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << (img.channels == 3 ? "PF" : "Pf") << "\n" << img.width << " " << img.height << "\n-1.0\n";
  std::vector<float> row(img.width * img.channels);
  for (std::size_t yy = 0; yy < img.height; ++yy) {
    const std::size_t y = img.height - 1 - yy;  // PFM rows run bottom to top
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < img.channels; ++c) row[x * img.channels + c] = img.at(c, y, x);
    archive::detail::Writer w;
    w.f32_block(row);
    out.write(reinterpret_cast<const char*>(w.buffer().data()), static_cast<std::streamsize>(w.size()));
  }
  if (!out) throw Error("write failed: " + path.string());
}

inline Image read_pfm(const std::filesystem::path& path) {
  auto bytes = archive::detail::slurp(path);
  std::string header;
  std::size_t pos = 0;
  int lines = 0;
  while (pos < bytes.size() && lines < 3) {
    if (bytes[pos] == '\n') ++lines;
    header.push_back(static_cast<char>(bytes[pos++]));
  }
  std::istringstream hs(header);
  std::string kind;
  std::size_t w = 0, h = 0;
  double scale = 0.0;
  if (!(hs >> kind >> w >> h >> scale) || (kind != "PF" && kind != "Pf"))
    throw FormatError("read_pfm: bad header in " + path.string());
  if (scale >= 0.0) throw FormatError("read_pfm: only little-endian maps are supported");
  const std::size_t ch = kind == "PF" ? 3 : 1;
  if (bytes.size() - pos != w * h * ch * 4) throw CorruptionError("read_pfm: pixel block size mismatch");
  archive::detail::Reader r(std::vector<unsigned char>(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end()));
  const auto px = r.f32_block(0, w * h * ch);
  Image img(ch, h, w);
  for (std::size_t yy = 0; yy < h; ++yy)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < ch; ++c) img.at(c, h - 1 - yy, x) = px[(yy * w + x) * ch + c];
  return img;
}

// One PFM per group of three colour planes, plus index.csv (trial,label,part,file).
inline void export_spectrograms(const SpectrogramBatch& batch, std::span<const std::uint32_t> labels,
                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / "index.csv", std::ios::trunc);
  if (!index) throw Error("cannot write " + (dir / "index.csv").string());
  index << "trial,label,part,file\n";
  const auto& t = batch.images;
  const std::size_t parts = t.c() / 3;
  for (std::size_t i = 0; i < t.n(); ++i) {
    for (std::size_t p = 0; p < parts; ++p) {
      Image img(3, t.h(), t.w());
      auto s = t.sample(i);
      std::copy_n(s.begin() + static_cast<std::ptrdiff_t>(p * 3 * t.h() * t.w()), img.data.size(), img.data.begin());
      std::ostringstream name;
      name << "trial_" << i;
      if (parts > 1) name << "_part" << p;
      name << ".pfm";
      write_pfm(dir / name.str(), img);
      index << i << "," << (i < labels.size() ? labels[i] : 0) << "," << p << "," << name.str() << "\n";
    }
  }
}

}  // namespace tsff
