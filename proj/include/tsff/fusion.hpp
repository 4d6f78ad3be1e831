#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "tsff/error.hpp"
#include "tsff/tensor.hpp"

namespace tsff {

enum class SoftmaxAxis { kFeature, kBatch };

struct FusionConfig {
  double freq_weight = 0.001;  // w_f: share of the time-frequency features in G
  double mmd_weight = 0.0;     // lambda
  std::vector<double> bandwidth_multipliers = {0.25, 0.5, 1.0, 2.0, 4.0};
  SoftmaxAxis softmax_axis = SoftmaxAxis::kFeature;
  bool fuse_normalized = false;  // fuse softmax-normalized S, F instead of the raw features

  std::size_t n_kernels() const { return bandwidth_multipliers.size(); }

  void validate() const {
    if (!(freq_weight >= 0.0 && freq_weight <= 1.0)) throw ArgumentError("FusionConfig: freq_weight must lie in [0, 1]");
    if (!(mmd_weight >= 0.0) || !std::isfinite(mmd_weight)) throw ArgumentError("FusionConfig: mmd_weight must be >= 0");
    if (bandwidth_multipliers.empty()) throw ArgumentError("FusionConfig: need at least one kernel bandwidth");
    for (double m : bandwidth_multipliers)
      if (!(m > 0.0)) throw ArgumentError("FusionConfig: bandwidth multipliers must be positive");
  }
};

namespace detail {

template <typename T>
void require_matrix_pair(const Tensor<T>& a, const Tensor<T>& b, const char* who) {
  if (a.n() != b.n() || a.stride0() != b.stride0())
    throw ArgumentError(std::string(who) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
}

}  // namespace detail

// Row-wise (per-sample) softmax by default; kBatch normalizes each feature
// column across the batch instead.
template <typename T>
Tensor<T> softmax_normalize(const Tensor<T>& x, SoftmaxAxis axis = SoftmaxAxis::kFeature) {
  const std::size_t N = x.n(), D = x.stride0();
  Tensor<T> y = Tensor<T>::matrix(N, D);
  const std::size_t outer = axis == SoftmaxAxis::kFeature ? N : D;
  const std::size_t inner = axis == SoftmaxAxis::kFeature ? D : N;
  const auto idx = [&](std::size_t o, std::size_t i) { return axis == SoftmaxAxis::kFeature ? o * D + i : i * D + o; };
  for (std::size_t o = 0; o < outer; ++o) {
    double mx = -INFINITY;
    for (std::size_t i = 0; i < inner; ++i) mx = std::max(mx, static_cast<double>(x[idx(o, i)]));
    double z = 0.0;
    for (std::size_t i = 0; i < inner; ++i) z += std::exp(static_cast<double>(x[idx(o, i)]) - mx);
    for (std::size_t i = 0; i < inner; ++i)
      y[idx(o, i)] = static_cast<T>(std::exp(static_cast<double>(x[idx(o, i)]) - mx) / z);
  }
  return y;
}

// dL/dx given the softmax output y and dL/dy.
template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& y, const Tensor<T>& gy, SoftmaxAxis axis = SoftmaxAxis::kFeature) {
  detail::require_matrix_pair(y, gy, "softmax_backward");
  const std::size_t N = y.n(), D = y.stride0();
  Tensor<T> gx = Tensor<T>::matrix(N, D);
  const std::size_t outer = axis == SoftmaxAxis::kFeature ? N : D;
  const std::size_t inner = axis == SoftmaxAxis::kFeature ? D : N;
  const auto idx = [&](std::size_t o, std::size_t i) { return axis == SoftmaxAxis::kFeature ? o * D + i : i * D + o; };
  for (std::size_t o = 0; o < outer; ++o) {
    double dot = 0.0;
    for (std::size_t i = 0; i < inner; ++i) dot += static_cast<double>(y[idx(o, i)]) * gy[idx(o, i)];
    for (std::size_t i = 0; i < inner; ++i)
      gx[idx(o, i)] = static_cast<T>(static_cast<double>(y[idx(o, i)]) * (gy[idx(o, i)] - dot));
  }
  return gx;
}

template <typename T>
struct MmdResult {
  double value = 0.0;
  Tensor<T> grad_a, grad_b;
};

// Squared MMD between the rows of a and b (biased V-statistic) with a
// Gaussian kernel averaged over bandwidths base * m_k, where base is the
// median squared distance over all distinct pooled pairs. The bandwidth is
// part of the graph: gradients include its dependence on the inputs.
template <typename T>
MmdResult<T> mmd_loss(const Tensor<T>& a, const Tensor<T>& b, const FusionConfig& cfg, bool with_grad = true) {
  if (a.stride0() != b.stride0())
    throw ArgumentError("mmd_loss: feature dimension mismatch " + a.shape_string() + " vs " + b.shape_string());
  if (a.n() < 2 || b.n() < 2) throw ArgumentError("mmd_loss: estimator needs at least two samples per side");
  const std::size_t na = a.n(), nb = b.n(), n = na + nb, D = a.stride0();
  const auto row = [&](std::size_t i) -> const T* { return i < na ? a.data() + i * D : b.data() + (i - na) * D; };
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = i < na ? 1.0 / static_cast<double>(na) : -1.0 / static_cast<double>(nb);

  std::vector<double> dist(n * n, 0.0);
  std::vector<double> upper;
  upper.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const T* zi = row(i);
      const T* zj = row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < D; ++k) {
        const double d = static_cast<double>(zi[k]) - zj[k];
        s += d * d;
      }
      dist[i * n + j] = dist[j * n + i] = s;
      upper.push_back(s);
    }

  // Median with the pair(s) that define it, so the gradient can flow back.
  std::vector<std::size_t> order(upper.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  const std::size_t m = upper.size();
  const std::size_t hi = m / 2;
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(hi), order.end(),
                   [&](std::size_t x, std::size_t y) { return upper[x] < upper[y] || (upper[x] == upper[y] && x < y); });
  std::vector<std::pair<std::size_t, double>> median_pairs;  // (upper index, d median / d value)
  double median = upper[order[hi]];
  if (m % 2 == 0) {
    const auto lo_it = std::max_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(hi),
                                        [&](std::size_t x, std::size_t y) {
                                          return upper[x] < upper[y] || (upper[x] == upper[y] && x < y);
                                        });
    median = 0.5 * (median + upper[*lo_it]);
    median_pairs = {{order[hi], 0.5}, {*lo_it, 0.5}};
  } else {
    median_pairs = {{order[hi], 1.0}};
  }
  const bool base_from_data = median > 0.0;
  const double base = base_from_data ? median : 1.0;

  double value = 0.0, g_base = 0.0;
  std::vector<double> g_dist(n * n, 0.0);  // dL/d dist for i < j
  const double K = static_cast<double>(cfg.n_kernels());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double d = dist[i * n + j];
      double k_val = 0.0, k_dd = 0.0, k_db = 0.0;
      for (double mult : cfg.bandwidth_multipliers) {
        const double bw = base * mult;
        const double e = std::exp(-d / bw);
        k_val += e;
        k_dd -= e / bw;
        k_db += e * d / (bw * base);
      }
      const double c = w[i] * w[j] * (i == j ? 1.0 : 2.0);
      value += c * k_val / K;
      if (i != j) g_dist[i * n + j] = c * k_dd / K;
      g_base += c * k_db / K;
    }
  value = std::max(value, 0.0);

  MmdResult<T> out;
  out.value = value;
  if (!with_grad) return out;
  if (base_from_data) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j, ++k)
        for (const auto& [idx, share] : median_pairs)
          if (idx == k) g_dist[i * n + j] += g_base * share;
  }
  std::vector<double> gz(n * D, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double g = g_dist[i * n + j];
      if (g == 0.0) continue;
      const T* zi = row(i);
      const T* zj = row(j);
      double* gi = &gz[i * D];
      double* gj = &gz[j * D];
      for (std::size_t k = 0; k < D; ++k) {
        const double t = 2.0 * g * (static_cast<double>(zi[k]) - zj[k]);
        gi[k] += t;
        gj[k] -= t;
      }
    }
  out.grad_a = Tensor<T>(a.n(), a.c(), a.h(), a.w());
  out.grad_b = Tensor<T>(b.n(), b.c(), b.h(), b.w());
  for (std::size_t k = 0; k < na * D; ++k) out.grad_a[k] = static_cast<T>(gz[k]);
  for (std::size_t k = 0; k < nb * D; ++k) out.grad_b[k] = static_cast<T>(gz[na * D + k]);
  return out;
}

// G = (1 - w_f) S + w_f F.
template <typename T>
Tensor<T> fuse_features(const Tensor<T>& s, const Tensor<T>& f, double w_f) {
  detail::require_matrix_pair(s, f, "fuse_features");
  if (!(w_f >= 0.0 && w_f <= 1.0)) throw ArgumentError("fuse_features: w_f must lie in [0, 1]");
  Tensor<T> g = Tensor<T>::matrix(s.n(), s.stride0());
  const T ws = static_cast<T>(1.0 - w_f), wf = static_cast<T>(w_f);
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = ws * s[k] + wf * f[k];
  return g;
}

template <typename T>
struct CrossEntropyResult {
  double value = 0.0;
  Tensor<T> grad;  // dL/dlogits
};

template <typename T>
CrossEntropyResult<T> cross_entropy(const Tensor<T>& logits, std::span<const std::uint32_t> labels) {
  const std::size_t N = logits.n(), M = logits.stride0();
  if (labels.size() != N) throw ArgumentError("cross_entropy: label count does not match batch");
  if (N == 0) throw ArgumentError("cross_entropy: empty batch");
  CrossEntropyResult<T> out;
  out.grad = Tensor<T>::matrix(N, M);
  double total = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    if (labels[n] >= M)
      throw ArgumentError("cross_entropy: label " + std::to_string(labels[n]) + " outside [0, " + std::to_string(M) + ")");
    const T* z = logits.data() + n * M;
    double mx = -INFINITY;
    for (std::size_t m = 0; m < M; ++m) mx = std::max(mx, static_cast<double>(z[m]));
    double sum = 0.0;
    for (std::size_t m = 0; m < M; ++m) sum += std::exp(static_cast<double>(z[m]) - mx);
    const double lse = mx + std::log(sum);
    total += lse - z[labels[n]];
    for (std::size_t m = 0; m < M; ++m) {
      const double p = std::exp(static_cast<double>(z[m]) - lse);
      out.grad[n * M + m] = static_cast<T>((p - (m == labels[n] ? 1.0 : 0.0)) / static_cast<double>(N));
    }
  }
  out.value = total / static_cast<double>(N);
  return out;
}

template <typename T>
struct LossResult {
  double total = 0.0, ce = 0.0, mmd = 0.0;
  Tensor<T> grad_logits;
  // MMD contributions to dL/dS and dL/dF (already scaled by lambda and pushed
  // through the softmax normalization); empty when lambda == 0.
  Tensor<T> grad_s, grad_f;
};

// L = CE(logits) + lambda * MMD(softmax(S), softmax(F)). With lambda == 0 the
// MMD term is never evaluated.
template <typename T>
LossResult<T> total_loss(const Tensor<T>& logits, std::span<const std::uint32_t> labels, const Tensor<T>& s,
                         const Tensor<T>& f, const FusionConfig& cfg) {
  LossResult<T> out;
  auto ce = cross_entropy(logits, labels);
  out.ce = ce.value;
  out.grad_logits = std::move(ce.grad);
  out.total = out.ce;
  if (cfg.mmd_weight == 0.0) return out;
  const Tensor<T> sn = softmax_normalize(s, cfg.softmax_axis);
  const Tensor<T> fn = softmax_normalize(f, cfg.softmax_axis);
  auto mmd = mmd_loss(sn, fn, cfg);
  out.mmd = mmd.value;
  out.total += cfg.mmd_weight * mmd.value;
  for (auto& v : mmd.grad_a.vec()) v = static_cast<T>(cfg.mmd_weight * v);
  for (auto& v : mmd.grad_b.vec()) v = static_cast<T>(cfg.mmd_weight * v);
  out.grad_s = softmax_backward(sn, mmd.grad_a, cfg.softmax_axis);
  out.grad_f = softmax_backward(fn, mmd.grad_b, cfg.softmax_axis);
  return out;
}

}  // namespace tsff
