#pragma once

// Shared test utilities: a central-difference gradient checker for layers
// and whole models, plus a brute-force AP oracle written independently of
// the library implementation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ivd/learn/layers.hpp"
#include "ivd/learn/model.hpp"
#include "ivd/rng.hpp"

namespace testutil {

// Worst relative error across gradients of J = sum(c * f(x; theta)) with a
// random fixed weighting c, comparing analytic backward to central
// differences. Checks every parameter tensor and the input gradient.
struct GradCheckResult {
  double worst = 0.0;
  std::size_t checked = 0;
};

inline double rel_err(double a, double n) {
  return std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)});
}

inline GradCheckResult grad_check_layer(ivd::Layer<double>& layer,
                                        ivd::Tensor<double> x,
                                        std::uint64_t seed, bool training,
                                        double h = 1e-5) {
  ivd::Rng init_rng(ivd::Rng::derive(seed, 1));
  layer.init(init_rng);
  ivd::Rng data_rng(ivd::Rng::derive(seed, 2));
  for (auto& v : x.data) v = data_rng.uniform(-1.0, 1.0);

  // Dropout-style layers draw masks from the forward rng; re-seeding before
  // every forward keeps the network function fixed during differencing.
  const std::uint64_t fwd_seed = ivd::Rng::derive(seed, 3);
  const auto run = [&](const ivd::Tensor<double>& in) {
    ivd::Rng rng(fwd_seed);
    return layer.forward(in, training, rng);
  };

  ivd::Tensor<double> y = run(x);
  ivd::Tensor<double> c(y.shape);
  ivd::Rng c_rng(ivd::Rng::derive(seed, 4));
  for (auto& v : c.data) v = c_rng.uniform(-1.0, 1.0);

  const auto loss = [&](const ivd::Tensor<double>& in) {
    const ivd::Tensor<double> out = run(in);
    double s = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i)
      s += c.data[i] * out.data[i];
    return s;
  };

  layer.zero_grads();
  const ivd::Tensor<double> dx = layer.backward(c);

  GradCheckResult res;
  const auto check_tensor = [&](ivd::Tensor<double>& param,
                                const ivd::Tensor<double>& grad,
                                const std::function<double()>& eval) {
    for (std::size_t i = 0; i < param.data.size(); ++i) {
      const double orig = param.data[i];
      param.data[i] = orig + h;
      const double jp = eval();
      param.data[i] = orig - h;
      const double jm = eval();
      param.data[i] = orig;
      const double numeric = (jp - jm) / (2 * h);
      res.worst = std::max(res.worst, rel_err(grad.data[i], numeric));
      ++res.checked;
    }
  };

  const auto params = layer.params();
  const auto grads = layer.grads();
  for (std::size_t p = 0; p < params.size(); ++p)
    check_tensor(*params[p], *grads[p], [&] { return loss(x); });
  check_tensor(x, dx, [&] { return loss(x); });
  return res;
}

// Same check through a full model with softmax cross-entropy on top.
inline GradCheckResult grad_check_model(ivd::Model<double>& model,
                                        ivd::Tensor<double> x,
                                        const std::vector<int>& labels,
                                        std::uint64_t seed, double h = 1e-5) {
  ivd::Rng init_rng(ivd::Rng::derive(seed, 1));
  model.init(init_rng);
  ivd::Rng data_rng(ivd::Rng::derive(seed, 2));
  for (auto& v : x.data) v = data_rng.uniform(-1.0, 1.0);

  const std::uint64_t fwd_seed = ivd::Rng::derive(seed, 3);
  const auto loss = [&] {
    ivd::Rng rng(fwd_seed);
    const auto logits = model.forward(x, /*training=*/true, rng);
    return double(ivd::softmax_cross_entropy(logits, labels).first);
  };

  model.zero_grads();
  {
    ivd::Rng rng(fwd_seed);
    const auto logits = model.forward(x, true, rng);
    model.backward(ivd::softmax_cross_entropy(logits, labels).second);
  }

  GradCheckResult res;
  const auto params = model.params();
  const auto grads = model.grads();
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t i = 0; i < params[p]->data.size(); ++i) {
      const double orig = params[p]->data[i];
      params[p]->data[i] = orig + h;
      const double jp = loss();
      params[p]->data[i] = orig - h;
      const double jm = loss();
      params[p]->data[i] = orig;
      res.worst =
          std::max(res.worst, rel_err(grads[p]->data[i], (jp - jm) / (2 * h)));
      ++res.checked;
    }
  return res;
}

// Brute-force all-points AP, deliberately O(n^2): for every distinct score
// threshold recompute precision/recall from scratch, then sum precision at
// each recall step.
inline double brute_force_ap(const std::vector<double>& scores,
                             const std::vector<int>& labels) {
  std::size_t total_pos = 0;
  for (int l : labels) total_pos += l != 0;
  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  double ap = 0.0;
  std::size_t prev_tp = 0;
  for (double thr : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= thr) (labels[i] ? tp : fp)++;
    }
    const double precision = double(tp) / double(tp + fp);
    ap += double(tp - prev_tp) * precision;
    prev_tp = tp;
  }
  return ap / double(total_pos);
}

}  // namespace testutil
