#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ivd/errors.hpp"
#include "ivd/rng.hpp"

namespace ivd {

struct SvmConfig {
  double c = 0.5;
  double gamma = 0.0;  // <= 0 means 1 / (dim * feature variance)
  double tolerance = 1e-3;
  int max_passes = 10;
  std::uint64_t seed = 0;
};

// RBF-kernel SVM trained by simplified SMO, with Platt-scaled probabilities
// fitted on the training decision values.
struct SvmModel {
  std::vector<std::vector<double>> support_vectors;
  std::vector<double> alpha_y;  // alpha_i * y_i per support vector
  double bias = 0.0;
  double gamma = 1.0;
  double platt_a = 0.0;
  double platt_b = 0.0;

  double decision(const std::vector<double>& x) const {
    double f = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - support_vectors[i][j];
        d2 += d * d;
      }
      f += alpha_y[i] * std::exp(-gamma * d2);
    }
    return f;
  }
};

namespace internal {

// Platt's sigmoid calibration: fit P(y=1|f) = 1/(1+exp(A f + B)) by
// regularized maximum likelihood (Newton iterations as in Lin et al. 2007).
inline std::pair<double, double> fit_platt(const std::vector<double>& decisions,
                                           const std::vector<int>& labels) {
  const std::size_t n = decisions.size();
  double prior1 = 0;
  for (int y : labels) prior1 += y > 0;
  const double prior0 = double(n) - prior1;
  const double hi_target = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo_target = 1.0 / (prior0 + 2.0);

  double a = 0.0, b = std::log((prior0 + 1.0) / (prior1 + 1.0));
  const int max_iter = 100;
  const double min_step = 1e-10, sigma = 1e-12;

  const auto objective = [&](double aa, double bb) {
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = labels[i] > 0 ? hi_target : lo_target;
      const double z = aa * decisions[i] + bb;
      if (z >= 0)
        obj += t * z + std::log1p(std::exp(-z));
      else
        obj += (t - 1) * z + std::log1p(std::exp(z));
    }
    return obj;
  };

  double fval = objective(a, b);
  for (int it = 0; it < max_iter; ++it) {
    double h11 = sigma, h22 = sigma, h21 = 0, g1 = 0, g2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = labels[i] > 0 ? hi_target : lo_target;
      const double z = a * decisions[i] + b;
      double p, q;
      if (z >= 0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += decisions[i] * decisions[i] * d2;
      h22 += d2;
      h21 += decisions[i] * d2;
      const double d1 = t - p;
      g1 += decisions[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;

    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;

    double step = 1.0;
    while (step >= min_step) {
      const double na = a + step * da, nb = b + step * db;
      const double nf = objective(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        a = na;
        b = nb;
        fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < min_step) break;
  }
  return {a, b};
}

}  // namespace internal

// labels: +1 (idling) / -1 (stopped).
inline SvmModel svm_train(const std::vector<std::vector<double>>& features,
                          const std::vector<int>& labels,
                          const SvmConfig& cfg = {}) {
  const std::size_t n = features.size();
  if (n == 0 || labels.size() != n) throw UsageError("bad training set");
  const std::size_t dim = features[0].size();
  bool has_pos = false, has_neg = false;
  for (int y : labels) (y > 0 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw TrainingError("training set must contain both classes");
  if (cfg.c <= 0) throw SpecError("C must be positive");

  double gamma = cfg.gamma;
  if (gamma <= 0) {
    // 1 / (dim * variance of all feature components).
    double mean = 0, sq = 0;
    for (const auto& f : features)
      for (double v : f) {
        mean += v;
        sq += v * v;
      }
    const double cnt = double(n * dim);
    mean /= cnt;
    const double var = std::max(sq / cnt - mean * mean, 1e-9);
    gamma = 1.0 / (double(dim) * var);
  }

  // Precomputed kernel matrix.
  std::vector<double> kmat(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double dd = features[i][d] - features[j][d];
        d2 += dd * dd;
      }
      kmat[i * n + j] = kmat[j * n + i] = std::exp(-gamma * d2);
    }

  std::vector<double> alpha(n, 0.0), err(n);
  double b = 0.0;
  const std::vector<int>& y = labels;

  const auto decision = [&](std::size_t i) {
    double f = b;
    for (std::size_t j = 0; j < n; ++j)
      if (alpha[j] > 0) f += alpha[j] * y[j] * kmat[j * n + i];
    return f;
  };

  Rng rng(Rng::derive(cfg.seed, 0x53f0));
  int passes = 0;
  const double tol = cfg.tolerance, c = cfg.c;
  while (passes < cfg.max_passes) {
    int changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei = decision(i) - y[i];
      if ((y[i] * ei < -tol && alpha[i] < c) ||
          (y[i] * ei > tol && alpha[i] > 0)) {
        // Scan partners from a random offset until one makes progress, so a
        // single unlucky pick cannot stall convergence.
        const std::size_t start = rng.uniform_index(n);
        for (std::size_t jo = 0; jo < n; ++jo) {
          const std::size_t j = (start + jo) % n;
          if (j == i) continue;
          const double ej = decision(j) - y[j];
          const double ai_old = alpha[i], aj_old = alpha[j];
          double lo, hi;
          if (y[i] != y[j]) {
            lo = std::max(0.0, aj_old - ai_old);
            hi = std::min(c, c + aj_old - ai_old);
          } else {
            lo = std::max(0.0, ai_old + aj_old - c);
            hi = std::min(c, ai_old + aj_old);
          }
          if (lo >= hi) continue;
          const double eta =
              2.0 * kmat[i * n + j] - kmat[i * n + i] - kmat[j * n + j];
          if (eta >= 0) continue;
          double aj = aj_old - y[j] * (ei - ej) / eta;
          aj = std::clamp(aj, lo, hi);
          if (std::abs(aj - aj_old) < 1e-8) continue;
          const double ai = ai_old + y[i] * y[j] * (aj_old - aj);
          alpha[i] = ai;
          alpha[j] = aj;
          const double b1 = b - ei - y[i] * (ai - ai_old) * kmat[i * n + i] -
                            y[j] * (aj - aj_old) * kmat[i * n + j];
          const double b2 = b - ej - y[i] * (ai - ai_old) * kmat[i * n + j] -
                            y[j] * (aj - aj_old) * kmat[j * n + j];
          if (ai > 0 && ai < c)
            b = b1;
          else if (aj > 0 && aj < c)
            b = b2;
          else
            b = (b1 + b2) / 2.0;
          ++changed;
          break;
        }
      }
    }
    passes = changed == 0 ? passes + 1 : 0;
  }

  SvmModel model;
  model.gamma = gamma;
  model.bias = b;
  std::vector<double> decisions(n);
  for (std::size_t i = 0; i < n; ++i) decisions[i] = decision(i);
  for (std::size_t i = 0; i < n; ++i)
    if (alpha[i] > 0) {
      model.support_vectors.push_back(features[i]);
      model.alpha_y.push_back(alpha[i] * y[i]);
    }
  std::tie(model.platt_a, model.platt_b) = internal::fit_platt(decisions, y);
  return model;
}

inline double svm_predict_proba(const SvmModel& model,
                                const std::vector<double>& feature) {
  const double f = model.decision(feature);
  const double z = model.platt_a * f + model.platt_b;
  // P(idling | f); guarded for extreme z.
  if (z >= 0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

// KKT diagnostics for validity checks.
struct SvmKktReport {
  double max_violation = 0.0;    // worst KKT condition violation
  double dual_balance = 0.0;     // |sum alpha_i y_i|
  bool alphas_in_box = true;     // 0 <= alpha <= C
};

inline SvmKktReport svm_kkt_report(const SvmModel& model,
                                   const std::vector<std::vector<double>>& features,
                                   const std::vector<int>& labels,
                                   double c) {
  // Reconstruct per-sample alphas: non-support vectors have alpha 0.
  std::vector<double> alpha(features.size(), 0.0);
  std::size_t sv = 0;
  for (std::size_t i = 0; i < features.size() && sv < model.support_vectors.size();
       ++i)
    if (features[i] == model.support_vectors[sv]) {
      alpha[i] = model.alpha_y[sv] * labels[i];  // alpha = alpha_y * y
      ++sv;
    }
  SvmKktReport rep;
  double balance = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    balance += alpha[i] * labels[i];
    if (alpha[i] < -1e-12 || alpha[i] > c + 1e-12) rep.alphas_in_box = false;
    const double margin = labels[i] * model.decision(features[i]);
    double violation = 0.0;
    if (alpha[i] < 1e-8)
      violation = std::max(0.0, 1.0 - margin);
    else if (alpha[i] > c - 1e-8)
      violation = std::max(0.0, margin - 1.0);
    else
      violation = std::abs(margin - 1.0);
    rep.max_violation = std::max(rep.max_violation, violation);
  }
  rep.dual_balance = std::abs(balance);
  return rep;
}

}  // namespace ivd
