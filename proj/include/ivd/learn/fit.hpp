#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "ivd/errors.hpp"
#include "ivd/learn/model.hpp"
#include "ivd/learn/optim.hpp"

namespace ivd {

// Labeled sample set: X holds [N, ...sample shape...]; labels in {0,1},
// 1 = idling.
template <class T>
struct LabeledSet {
  Tensor<T> x;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t sample_numel() const {
    return labels.empty() ? 0 : x.numel() / labels.size();
  }

  LabeledSet subset(const std::vector<std::size_t>& idx) const {
    LabeledSet out;
    std::vector<int> shape = x.shape;
    shape[0] = int(idx.size());
    out.x = Tensor<T>(shape);
    const std::size_t sn = sample_numel();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      std::copy_n(x.ptr() + idx[i] * sn, sn, out.x.ptr() + i * sn);
      out.labels.push_back(labels[idx[i]]);
    }
    return out;
  }
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double v2_acc = 0.0;
};

struct FitOptions {
  // Stop after this many epochs without V2 improvement; 0 disables.
  int patience = 0;
  // Stop once inference-mode training accuracy reaches this level; > 1
  // disables. Used by capacity (overfit) checks.
  double stop_at_train_acc = 2.0;
  int eval_batch = 32;
};

struct FitResult {
  std::vector<EpochStats> history;
  double best_v2_acc = 0.0;
  int best_epoch = -1;
};

template <class T>
inline double accuracy(Model<T>& model, const LabeledSet<T>& set,
                       int eval_batch) {
  if (set.size() == 0) throw UsageError("accuracy on empty set");
  std::size_t correct = 0;
  const std::size_t sn = set.sample_numel();
  for (std::size_t at = 0; at < set.size();) {
    const std::size_t bn = std::min(std::size_t(eval_batch), set.size() - at);
    std::vector<int> shape = set.x.shape;
    shape[0] = int(bn);
    Tensor<T> batch(shape);
    std::copy_n(set.x.ptr() + at * sn, bn * sn, batch.ptr());
    const auto proba = model.predict_proba(batch);
    for (std::size_t i = 0; i < bn; ++i)
      correct += (proba[i] >= 0.5 ? 1 : 0) == set.labels[at + i];
    at += bn;
  }
  return double(correct) / double(set.size());
}

// Minimizes categorical cross entropy; evaluates V2 after every epoch and
// retains the best-V2 weights. Without a V2 set the final weights stand.
template <class T>
inline FitResult fit(Model<T>& model, const LabeledSet<T>& train,
                     const LabeledSet<T>& v2, const OptimizerConfig& opt_cfg,
                     std::uint64_t seed, const FitOptions& opts = {}) {
  if (train.size() == 0) throw UsageError("empty training set");
  opt_cfg.validate();

  Rng rng(Rng::derive(seed, 0xf17));
  model.init(rng);
  OptimizerState<T> state;
  state.init(model.params());

  FitResult result;
  std::vector<Tensor<T>> best_snapshot;
  const std::size_t sn = train.sample_numel();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < opt_cfg.max_epochs; ++epoch) {
    // Fisher-Yates shuffle from the fit stream.
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_index(i)]);

    double loss_sum = 0.0;
    std::size_t train_correct = 0, batches = 0;
    for (std::size_t at = 0; at < train.size();) {
      const std::size_t bn =
          std::min(std::size_t(opt_cfg.batch_size), train.size() - at);
      std::vector<int> shape = train.x.shape;
      shape[0] = int(bn);
      Tensor<T> batch(shape);
      std::vector<int> labels(bn);
      for (std::size_t i = 0; i < bn; ++i) {
        std::copy_n(train.x.ptr() + order[at + i] * sn, sn,
                    batch.ptr() + i * sn);
        labels[i] = train.labels[order[at + i]];
      }
      model.zero_grads();
      Tensor<T> logits = model.forward(batch, /*training=*/true, rng);
      auto [loss, dlogits] = softmax_cross_entropy(logits, labels);
      model.backward(dlogits);
      optimizer_step(state, model.params(), model.grads(), opt_cfg);

      loss_sum += double(loss);
      ++batches;
      for (std::size_t i = 0; i < bn; ++i)
        train_correct +=
            (logits.data[i * 2 + 1] > logits.data[i * 2] ? 1 : 0) == labels[i];
      at += bn;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / double(batches);
    stats.train_acc = double(train_correct) / double(train.size());
    stats.v2_acc =
        v2.size() ? accuracy(model, v2, opts.eval_batch) : 0.0;
    result.history.push_back(stats);

    if (v2.size() && stats.v2_acc > result.best_v2_acc) {
      result.best_v2_acc = stats.v2_acc;
      result.best_epoch = epoch;
      best_snapshot = model.snapshot();
    }
    if (opts.patience > 0 && v2.size() &&
        epoch - std::max(result.best_epoch, 0) >= opts.patience)
      break;
    if (opts.stop_at_train_acc <= 1.0 &&
        accuracy(model, train, opts.eval_batch) >= opts.stop_at_train_acc)
      break;
  }

  if (!best_snapshot.empty()) model.restore(best_snapshot);
  return result;
}

inline void save_history_csv(const std::vector<EpochStats>& history,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "epoch,train_loss,train_acc,v2_acc\n";
  for (const auto& s : history)
    out << s.epoch << "," << s.train_loss << "," << s.train_acc << ","
        << s.v2_acc << "\n";
}

}  // namespace ivd
