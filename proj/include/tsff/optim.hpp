#pragma once

#include <cmath>
#include <vector>

#include "tsff/error.hpp"
#include "tsff/nn/layers.hpp"

namespace tsff {

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;

  void validate() const {
    if (!(lr > 0.0)) throw ArgumentError("AdamW: lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ArgumentError("AdamW: betas must lie in [0, 1)");
    if (!(eps > 0.0) || !(weight_decay >= 0.0)) throw ArgumentError("AdamW: eps > 0 and weight_decay >= 0 required");
  }
};

// Adam with decoupled weight decay. Non-learnable params are skipped.
template <typename T>
class AdamW {
 public:
  AdamW(std::vector<nn::Param<T>*> params, AdamWOptions opt) : params_(std::move(params)), opt_(opt) {
    opt.validate();
    for (auto* p : params_) {
      m_.emplace_back(p->learnable ? p->value.size() : 0, 0.0);
      v_.emplace_back(p->learnable ? p->value.size() : 0, 0.0);
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    const double decay = 1.0 - opt_.lr * opt_.weight_decay;
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto* p = params_[k];
      if (!p->learnable) continue;
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double g = p->grad[i];
        m[i] = opt_.beta1 * m[i] + (1.0 - opt_.beta1) * g;
        v[i] = opt_.beta2 * v[i] + (1.0 - opt_.beta2) * g * g;
        const double upd = (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opt_.eps);
        p->value[i] = static_cast<T>(p->value[i] * decay - opt_.lr * upd);
      }
    }
  }

  std::size_t steps() const { return t_; }

 private:
  std::vector<nn::Param<T>*> params_;
  AdamWOptions opt_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace tsff
