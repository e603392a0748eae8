#pragma once

// AdamW with global-norm clipping and a linear warmup/decay schedule.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "schemex/model.hpp"

namespace schemex {

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double warmup_ratio = 0.1;
  double grad_clip = 2.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Linear warmup over the first warmup_ratio of steps, then linear decay to zero.
inline double scheduled_lr(const OptimizerConfig& c, std::size_t step, std::size_t total_steps) {
  if (total_steps == 0) return 0.0;
  const auto warmup = static_cast<std::size_t>(std::ceil(c.warmup_ratio * static_cast<double>(total_steps)));
  if (warmup > 0 && step < warmup) return c.learning_rate * static_cast<double>(step + 1) / static_cast<double>(warmup);
  const double remain = static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warmup);
  return c.learning_rate * std::max(0.0, remain);
}

template <class T>
double global_norm(const Model<T>& g) {
  double s = 0;
  for (const auto* t : param_list(g)) s += static_cast<double>(t->squaredNorm());
  return std::sqrt(s);
}

template <class T>
class AdamW {
 public:
  AdamW(const ModelDims& dims, OptimizerConfig cfg)
      : cfg_(cfg), m_(zero_model<T>(dims)), v_(zero_model<T>(dims)) {
    visit_params(m_, [&](const std::string& name, const Mat<T>&) {
      decay_.push_back(!name.ends_with(".bias") && !name.ends_with(".gain"));
    });
  }

  // Clips `grad` in place to the configured global norm and applies one update.
  // Returns the pre-clip gradient norm.
  double step(Model<T>& params, Model<T>& grad, double lr) {
    const double norm = global_norm(grad);
    if (cfg_.grad_clip > 0 && norm > cfg_.grad_clip) {
      const T s = static_cast<T>(cfg_.grad_clip / (norm + 1e-6));
      for (auto* g : param_list(grad)) *g *= s;
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    auto ps = param_list(params);
    auto gs = param_list(grad);
    auto ms = param_list(m_);
    auto vs = param_list(v_);
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    for (std::size_t k = 0; k < ps.size(); ++k) {
      auto& p = *ps[k];
      const auto& g = *gs[k];
      auto& m = *ms[k];
      auto& v = *vs[k];
      m = b1 * m + (T(1) - b1) * g;
      v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
      if (lr == 0.0) continue;
      if (decay_[k]) p *= static_cast<T>(1.0 - lr * cfg_.weight_decay);
      const T step_size = static_cast<T>(lr / bc1);
      const T root_bc2 = static_cast<T>(std::sqrt(bc2));
      const T eps = static_cast<T>(cfg_.eps);
      p.array() -= step_size * m.array() / (v.array().sqrt() / root_bc2 + eps);
    }
    return norm;
  }

 private:
  OptimizerConfig cfg_;
  Model<T> m_, v_;
  std::vector<bool> decay_;
  std::size_t t_ = 0;
};

}  // namespace schemex
