#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tsff/data_io.hpp"
#include "tsff/error.hpp"

namespace tsff {

struct FilterSpec {
  std::size_t order = 200;  // taps - 1
  double f_lo = 4.0;
  double f_hi = 38.0;
  double fs = 250.0;

  void validate() const {
    if (order == 0 || order % 2 != 0) throw ArgumentError("FilterSpec: order must be even and positive");
    if (!(f_lo > 0.0 && f_lo < f_hi && f_hi < fs / 2.0))
      throw ArgumentError("FilterSpec: need 0 < f_lo < f_hi < fs/2");
  }
};

struct SegmentSpec {
  double t_start = 2.0;  // seconds after cue
  double t_end = 6.0;

  std::size_t samples(double fs) const {
    if (!(t_end > t_start)) throw ArgumentError("SegmentSpec: t_end must exceed t_start");
    const double exact = (t_end - t_start) * fs;
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-6 * std::max(1.0, rounded))
      throw ArgumentError("SegmentSpec: window length times fs is not integral");
    return static_cast<std::size_t>(rounded);
  }
};

namespace detail {

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace detail

// Windowed-sinc bandpass with a symmetric Blackman window; unit gain at the
// passband centre.
inline std::vector<double> design_blackman_fir(const FilterSpec& spec) {
  spec.validate();
  const std::size_t order = spec.order;
  const std::size_t half = order / 2;
  const double lo = 2.0 * spec.f_lo / spec.fs;  // normalized to Nyquist = 1
  const double hi = 2.0 * spec.f_hi / spec.fs;
  std::vector<double> taps(order + 1);
  for (std::size_t k = 0; k <= half; ++k) {
    const double m = static_cast<double>(k) - static_cast<double>(half);
    const double ideal = hi * detail::sinc(hi * m) - lo * detail::sinc(lo * m);
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(order);
    const double window = 0.42 - 0.5 * std::cos(phi) + 0.08 * std::cos(2.0 * phi);
    taps[k] = ideal * window;
    taps[order - k] = taps[k];
  }
  const double centre = 0.5 * (spec.f_lo + spec.f_hi);
  double gain = 0.0;
  for (std::size_t k = 0; k <= order; ++k)
    gain += taps[k] * std::cos(2.0 * std::numbers::pi * centre * (static_cast<double>(k) - half) / spec.fs);
  for (auto& t : taps) t /= gain;
  return taps;
}

// Real response of the delay-compensated filter at frequency f.
inline double zero_phase_response(std::span<const double> taps, double f, double fs) {
  const double half = static_cast<double>(taps.size() - 1) / 2.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < taps.size(); ++k)
    acc += taps[k] * std::cos(2.0 * std::numbers::pi * f * (static_cast<double>(k) - half) / fs);
  return acc;
}

// DFT of the zero-padded taps: bins j = 0..n_points-1 at j*fs/n_points.
inline std::vector<std::complex<double>> frequency_response(std::span<const double> taps,
                                                            std::size_t n_points) {
  if (n_points < taps.size()) throw ArgumentError("frequency_response: fewer points than taps");
  std::vector<std::complex<double>> out(n_points);
  for (std::size_t j = 0; j < n_points; ++j) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < taps.size(); ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((j * k) % n_points) /
                           static_cast<double>(n_points);
      acc += taps[k] * std::polar(1.0, angle);
    }
    out[j] = acc;
  }
  return out;
}

// Zero-padded linear convolution, shifted by order/2 so output aligns with input.
inline void fir_filter_same(std::span<const float> in, std::span<float> out, std::span<const double> taps) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  const auto half = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto len = static_cast<std::ptrdiff_t>(taps.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const std::ptrdiff_t k_lo = std::max<std::ptrdiff_t>(0, i + half - (n - 1));
    const std::ptrdiff_t k_hi = std::min<std::ptrdiff_t>(len - 1, i + half);
    for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) acc += taps[k] * in[i + half - k];
    out[i] = static_cast<float>(acc);
  }
}

inline TrialSet bandpass_filter(const TrialSet& trials, const FilterSpec& spec) {
  if (std::abs(static_cast<double>(trials.fs) - spec.fs) > 1e-6 * spec.fs)
    throw ArgumentError("bandpass_filter: trial fs differs from filter fs");
  if (trials.n_samples < spec.order) throw ArgumentError("bandpass_filter: trial shorter than filter order");
  const auto taps = design_blackman_fir(spec);
  TrialSet out = trials;
  for (std::size_t i = 0; i < trials.n_trials; ++i)
    for (std::size_t c = 0; c < trials.n_channels; ++c)
      fir_filter_same(trials.channel(i, c), out.channel(i, c), taps);
  return out;
}

inline Recording bandpass_filter(const Recording& rec, const FilterSpec& spec) {
  if (std::abs(static_cast<double>(rec.fs) - spec.fs) > 1e-6 * spec.fs)
    throw ArgumentError("bandpass_filter: recording fs differs from filter fs");
  if (rec.n_samples < spec.order) throw ArgumentError("bandpass_filter: recording shorter than filter order");
  const auto taps = design_blackman_fir(spec);
  Recording out = rec;
  for (std::size_t c = 0; c < rec.n_channels; ++c) fir_filter_same(rec.channel(c), out.channel(c), taps);
  return out;
}

inline TrialSet segment_trials(const Recording& rec, const SegmentSpec& spec) {
  rec.validate();
  const double fs = rec.fs;
  const std::size_t len = spec.samples(fs);
  const auto offset = static_cast<std::int64_t>(std::llround(spec.t_start * fs));
  TrialSet out;
  out.n_trials = rec.cues.size();
  out.n_channels = rec.n_channels;
  out.n_samples = len;
  out.n_classes = rec.n_classes;
  out.fs = rec.fs;
  out.channels = rec.channels;
  out.dataset_id = rec.dataset_id;
  out.subject_id = rec.subject_id;
  out.data.resize(out.n_trials * out.n_channels * len);
  out.labels.resize(out.n_trials);
  for (std::size_t i = 0; i < rec.cues.size(); ++i) {
    const std::int64_t begin = static_cast<std::int64_t>(rec.cues[i].sample) + offset;
    if (begin < 0 || static_cast<std::uint64_t>(begin) + len > rec.n_samples)
      throw SegmentationError(i, "window [" + std::to_string(begin) + ", " +
                                     std::to_string(begin + static_cast<std::int64_t>(len)) +
                                     ") outside recording of " + std::to_string(rec.n_samples) + " samples");
    out.labels[i] = rec.cues[i].label;
    for (std::size_t c = 0; c < rec.n_channels; ++c) {
      auto src = rec.channel(c).subspan(static_cast<std::size_t>(begin), len);
      std::copy(src.begin(), src.end(), out.channel(i, c).begin());
    }
  }
  return out;
}

enum class NormalizeScope { kTrial, kChannel };

struct NormalizeResult {
  TrialSet trials;
  std::vector<std::size_t> zero_trials;  // left unchanged
};

// Divide each trial (or each channel of each trial) by its max absolute value.
inline NormalizeResult normalize_trials(const TrialSet& trials, NormalizeScope scope = NormalizeScope::kTrial) {
  NormalizeResult res{trials, {}};
  auto scale = [](std::span<float> v) {
    float m = 0.0f;
    for (float x : v) m = std::max(m, std::abs(x));
    if (m == 0.0f) return false;
    for (auto& x : v) x = x / m;
    return true;
  };
  for (std::size_t i = 0; i < trials.n_trials; ++i) {
    bool zero = false;
    if (scope == NormalizeScope::kTrial) {
      zero = !scale(res.trials.trial(i));
    } else {
      for (std::size_t c = 0; c < trials.n_channels; ++c) zero = !scale(res.trials.channel(i, c)) || zero;
    }
    if (zero) res.zero_trials.push_back(i);
  }
  return res;
}

struct AlignmentState {
  Eigen::MatrixXd r_bar;
  Eigen::MatrixXd r_inv_sqrt;
  double epsilon = 0.0;
};

// Mean of x_i x_i^T over trials (no 1/T factor).
inline Eigen::MatrixXd mean_covariance(const TrialSet& trials) {
  const std::size_t C = trials.n_channels;
  const std::size_t T = trials.n_samples;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(C));
  for (std::size_t i = 0; i < trials.n_trials; ++i) {
    auto x = trials.trial(i);
    for (std::size_t a = 0; a < C; ++a)
      for (std::size_t b = a; b < C; ++b) {
        double s = 0.0;
        for (std::size_t t = 0; t < T; ++t) s += static_cast<double>(x[a * T + t]) * x[b * T + t];
        acc(a, b) += s;
      }
  }
  acc /= static_cast<double>(trials.n_trials);
  return acc.selfadjointView<Eigen::Upper>();
}

// epsilon defaults to 1e-8 * trace(R_bar) / C.
inline AlignmentState fit_alignment(const TrialSet& trials, std::optional<double> epsilon = std::nullopt) {
  if (trials.n_trials == 0) throw ArgumentError("fit_alignment: no trials");
  for (float v : trials.data)
    if (!std::isfinite(v)) throw NumericError("fit_alignment: non-finite sample");
  AlignmentState st;
  st.r_bar = mean_covariance(trials);
  const double C = static_cast<double>(trials.n_channels);
  st.epsilon = epsilon.value_or(1e-8 * st.r_bar.trace() / C);
  if (st.epsilon < 0.0) throw ArgumentError("fit_alignment: epsilon must be nonnegative");
  const Eigen::MatrixXd reg =
      st.r_bar + st.epsilon * Eigen::MatrixXd::Identity(st.r_bar.rows(), st.r_bar.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reg);
  if (eig.info() != Eigen::Success) throw NumericError("fit_alignment: eigendecomposition failed");
  Eigen::VectorXd lam = eig.eigenvalues();
  for (Eigen::Index k = 0; k < lam.size(); ++k) {
    if (st.epsilon > 0.0) lam(k) = std::max(lam(k), st.epsilon);
    if (!(lam(k) > 0.0)) throw ConditioningError("fit_alignment: non-positive eigenvalue after regularization");
  }
  const Eigen::MatrixXd& V = eig.eigenvectors();
  Eigen::MatrixXd m = V * lam.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
  st.r_inv_sqrt = 0.5 * (m + m.transpose());
  return st;
}

inline TrialSet apply_alignment(const TrialSet& trials, const AlignmentState& st) {
  const auto C = static_cast<Eigen::Index>(trials.n_channels);
  if (st.r_inv_sqrt.rows() != C || st.r_inv_sqrt.cols() != C)
    throw ArgumentError("apply_alignment: channel count differs from alignment state");
  TrialSet out = trials;
  const std::size_t T = trials.n_samples;
  std::vector<double> col(trials.n_channels);
  for (std::size_t i = 0; i < trials.n_trials; ++i) {
    auto src = trials.trial(i);
    auto dst = out.trial(i);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t c = 0; c < trials.n_channels; ++c) col[c] = src[c * T + t];
      for (Eigen::Index a = 0; a < C; ++a) {
        double s = 0.0;
        for (Eigen::Index b = 0; b < C; ++b) s += st.r_inv_sqrt(a, b) * col[static_cast<std::size_t>(b)];
        dst[static_cast<std::size_t>(a) * T + t] = static_cast<float>(s);
      }
    }
  }
  return out;
}

struct PreprocessOptions {
  FilterSpec filter{};
  SegmentSpec segment{};
  NormalizeScope normalize = NormalizeScope::kTrial;
  std::optional<double> epsilon;  // alignment regularization; default scale-relative
  bool align = true;
};

// filter -> segment -> normalize on one continuous session (no alignment).
inline NormalizeResult preprocess_recording(const Recording& rec, const PreprocessOptions& opt) {
  auto filtered = bandpass_filter(rec, opt.filter);
  auto trials = segment_trials(filtered, opt.segment);
  return normalize_trials(trials, opt.normalize);
}

}  // namespace tsff
