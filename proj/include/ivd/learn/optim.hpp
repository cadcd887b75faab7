#pragma once

#include <cmath>
#include <vector>

#include "ivd/errors.hpp"
#include "ivd/learn/tensor.hpp"

namespace ivd {

enum class OptimizerKind { adam, nesterov_momentum };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double momentum = 0.1;
  double decay_factor = 0.96;  // staircase: lr * factor^floor(step/decay_step)
  int decay_step = 100;
  int max_epochs = 100;
  int batch_size = 16;

  void validate() const {
    if (learning_rate <= 0) throw SpecError("learning rate must be positive");
    if (momentum < 0 || momentum >= 1) throw SpecError("momentum in [0,1)");
    if (decay_factor <= 0 || decay_factor > 1)
      throw SpecError("decay factor in (0,1]");
  }
};

template <class T>
struct OptimizerState {
  std::vector<Tensor<T>> m;  // adam first moment / momentum velocity
  std::vector<Tensor<T>> v;  // adam second moment
  long step = 0;

  template <class P>
  void init(const std::vector<P*>& params) {
    m.clear();
    v.clear();
    for (const auto* p : params) {
      m.emplace_back(p->shape);
      v.emplace_back(p->shape);
    }
    step = 0;
  }
};

// Bias-corrected Adam update.
template <class T>
inline void adam_step(OptimizerState<T>& state,
                      const std::vector<Tensor<T>*>& params,
                      const std::vector<Tensor<T>*>& grads,
                      const OptimizerConfig& cfg) {
  cfg.validate();
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<T>& p = *params[pi];
    const Tensor<T>& g = *grads[pi];
    Tensor<T>& m = state.m[pi];
    Tensor<T>& v = state.v[pi];
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      m.data[i] = T(cfg.beta1) * m.data[i] + T(1 - cfg.beta1) * g.data[i];
      v.data[i] =
          T(cfg.beta2) * v.data[i] + T(1 - cfg.beta2) * g.data[i] * g.data[i];
      const double mh = double(m.data[i]) / bc1;
      const double vh = double(v.data[i]) / bc2;
      p.data[i] -= T(cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon));
    }
  }
}

inline double staircase_lr(const OptimizerConfig& cfg, long global_step) {
  return cfg.learning_rate *
         std::pow(cfg.decay_factor, double(global_step / cfg.decay_step));
}

// Nesterov momentum with staircase decay:
//   lr = lr0 * factor^floor(step/decay_step)
//   v <- mu*v - lr*g;  p += mu*v - lr*g
template <class T>
inline void nesterov_momentum_step(OptimizerState<T>& state,
                                   const std::vector<Tensor<T>*>& params,
                                   const std::vector<Tensor<T>*>& grads,
                                   const OptimizerConfig& cfg,
                                   long global_step) {
  cfg.validate();
  const T lr = T(staircase_lr(cfg, global_step));
  const T mu = T(cfg.momentum);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<T>& p = *params[pi];
    const Tensor<T>& g = *grads[pi];
    Tensor<T>& v = state.m[pi];
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      v.data[i] = mu * v.data[i] - lr * g.data[i];
      p.data[i] += mu * v.data[i] - lr * g.data[i];
    }
  }
  ++state.step;
}

// Dispatch on the configured kind, tracking the global step internally.
template <class T>
inline void optimizer_step(OptimizerState<T>& state,
                           const std::vector<Tensor<T>*>& params,
                           const std::vector<Tensor<T>*>& grads,
                           const OptimizerConfig& cfg) {
  if (cfg.kind == OptimizerKind::adam)
    adam_step(state, params, grads, cfg);
  else
    nesterov_momentum_step(state, params, grads, cfg, state.step);
}

}  // namespace ivd
