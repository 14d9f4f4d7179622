#pragma once

// Adam with decoupled weight decay, plus a one-cycle learning-rate schedule
// (cosine warm-up to max_lr, cosine anneal to max_lr/div/final_div).

#include <cmath>
#include <stdexcept>

#include "ccrseq/params.hpp"

namespace ccrseq {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

template <class S>
struct AdamState {
  ModelParams<S> m, v;
  long t = 0;

  static AdamState shaped_like(const ModelParams<S>& p) {
    return AdamState{p.zero_clone(), p.zero_clone(), 0};
  }
};

// One optimizer step over every tensor of `p`; decay is decoupled (applied
// directly to parameters, never folded into the gradient).
template <class S>
void adamw_step(ModelParams<S>& p, const ModelParams<S>& g, AdamState<S>& st,
                const AdamConfig& cfg, double lr) {
  if (!p.same_shapes(g) || !p.same_shapes(st.m))
    throw std::invalid_argument("adamw_step: shape mismatch");
  ++st.t;
  const S b1 = S(cfg.beta1), b2 = S(cfg.beta2);
  const S bc1 = S(1) - std::pow(b1, S(st.t));
  const S bc2 = S(1) - std::pow(b2, S(st.t));
  auto pt = p.named_tensors();
  auto gt = g.named_tensors();
  auto mt = st.m.named_tensors();
  auto vt = st.v.named_tensors();
  for (size_t i = 0; i < pt.size(); ++i) {
    auto& w = *pt[i].second;
    const auto& grad = *gt[i].second;
    auto& m = *mt[i].second;
    auto& v = *vt[i].second;
    if (cfg.weight_decay != 0) w.array() -= S(lr) * S(cfg.weight_decay) * w.array();
    m = b1 * m + (S(1) - b1) * grad;
    v = (b2 * v.array() + (S(1) - b2) * grad.array().square()).matrix();
    w.array() -= S(lr) * (m.array() / bc1) / ((v.array() / bc2).sqrt() + S(cfg.eps));
  }
}

struct OneCycleSchedule {
  double max_lr = 1e-3;
  double pct_start = 0.3;
  double div_factor = 25.0;
  double final_div_factor = 1e4;
  long total_steps = 1;

  // lr for optimizer step `step` (0-based).
  double lr_at(long step) const {
    if (total_steps <= 0) throw std::invalid_argument("one-cycle: total_steps must be positive");
    const double initial = max_lr / div_factor;
    const double final_lr = initial / final_div_factor;
    const long up = std::max(1L, static_cast<long>(std::lround(pct_start * total_steps)));
    if (step < up) {
      const double t = static_cast<double>(step) / up;
      return initial + (max_lr - initial) * (1.0 - std::cos(M_PI * t)) / 2.0;
    }
    const long down = std::max(1L, total_steps - up);
    const double t = static_cast<double>(step - up) / down;
    return final_lr + (max_lr - final_lr) * (1.0 + std::cos(M_PI * std::min(t, 1.0))) / 2.0;
  }
};

}  // namespace ccrseq
