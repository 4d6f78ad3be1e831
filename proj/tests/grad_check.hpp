#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "tsff/random.hpp"
#include "tsff/nn/layers.hpp"
#include "tsff/tensor.hpp"

namespace tsff::test {

struct GradTarget {
  std::string name;
  Tensor<double>* value;
  Tensor<double> analytic;
};

struct GradReport {
  double max_rel = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

// Central differences on up to per_tensor sampled entries of each target.
// Relative error is |a - n| / max(|a|, |n|, floor).
inline GradReport check_gradients(const std::function<double()>& loss, std::vector<GradTarget>& targets,
                                  std::size_t per_tensor, std::uint64_t seed, double h = 1e-6,
                                  double floor = 1e-5) {
  GradReport rep;
  Rng rng(seed);
  for (auto& t : targets) {
    std::vector<std::size_t> idx(t.value->size());
    std::iota(idx.begin(), idx.end(), 0);
    if (idx.size() > per_tensor) {
      for (std::size_t i = 0; i < per_tensor; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
      idx.resize(per_tensor);
    }
    for (std::size_t i : idx) {
      double& v = (*t.value)[i];
      const double saved = v;
      v = saved + h;
      const double up = loss();
      v = saved - h;
      const double down = loss();
      v = saved;
      const double num = (up - down) / (2.0 * h);
      const double ana = t.analytic[i];
      const double rel = std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), floor});
      ++rep.checked;
      if (rel > rep.max_rel) {
        rep.max_rel = rel;
        rep.worst = t.name + "[" + std::to_string(i) + "] analytic " + std::to_string(ana) + " numeric " +
                    std::to_string(num);
      }
    }
  }
  return rep;
}

inline Tensor<double> random_tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, Rng& rng,
                                    double scale = 1.0) {
  Tensor<double> t(n, c, h, w);
  for (auto& v : t.vec()) v = scale * rng.normal();
  return t;
}

inline double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace tsff::test

namespace tsff::test {

// Finite-difference check of d(logits . r)/d(params) for a network exposing
// forward_classify / backward_classify / params, in training mode with a
// replayed dropout stream. ReLU networks need a smaller step: a bias shifts a
// whole feature map, and +-h then crosses a few kinks.
template <typename Net>
GradReport network_grad(Net& net, const Tensor<double>& x, std::size_t per_tensor, std::uint64_t seed,
                        double h = 1e-6) {
  auto run = [&] {
    Rng drop(seed + 1);
    nn::Mode mode{true, &drop};
    return net.forward_classify(x, mode);
  };
  Rng rng(seed);
  const auto y0 = run();
  const auto r = random_tensor(y0.n(), y0.c(), y0.h(), y0.w(), rng);
  auto ps = net.params();
  for (auto* p : ps) p->zero_grad();
  net.backward_classify(r);
  std::vector<GradTarget> targets;
  for (auto* p : ps)
    if (p->learnable) targets.push_back({p->name, &p->value, p->grad});
  return check_gradients([&] { return dot(run(), r); }, targets, per_tensor, seed + 2, h);
}

}  // namespace tsff::test
