#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ivd/classify.hpp"
#include "ivd/detect.hpp"
#include "ivd/errors.hpp"
#include "ivd/evalharness.hpp"
#include "ivd/learn/fit.hpp"
#include "ivd/learn/model.hpp"
#include "ivd/learn/svm.hpp"
#include "ivd/track.hpp"

namespace ivd {

// ---------------------------------------------------------------------------
// Cross-validated training/evaluation over a dataset of sequences.

struct ExperimentConfig {
  std::string family = "cnn2d";  // cnn1d | lstm | svm | cnn2d | cnn_lstm
  std::string cv = "ltco";       // loco | ltco
  std::string boxes = "annotated";  // annotated | detected
  std::string mode = "sequence";    // sequence | subsequence
  int restarts = 2;
  std::uint64_t seed = 1;
  // Window start stride for the training split; evaluation always walks
  // stride 1 up to the per-sequence cap.
  int train_stride = 6;
  int stack_frames = 7;
  int stack_size = 100;
  bool augment_train = true;
  AugmentConfig augment;
  // Optimizer/fit knobs; learning rates default per family when the
  // learning rate is left at zero.
  OptimizerConfig optimizer;
  FitOptions fit_options{.patience = 3};
  SvmConfig svm;
  DetectorConfig detector;
  TrackerConfig tracker;
};

inline bool family_is_temporal(const std::string& family) {
  return family == "cnn1d" || family == "lstm" || family == "svm";
}

inline ModelSpec spec_for_family(const ExperimentConfig& cfg) {
  if (cfg.family == "cnn1d") return temporal_cnn1d_spec();
  if (cfg.family == "lstm") return temporal_lstm_spec();
  if (cfg.family == "cnn2d") return cnn2d_spec(cfg.stack_frames, cfg.stack_size);
  if (cfg.family == "cnn_lstm")
    return cnn_lstm_spec(cfg.stack_frames, cfg.stack_size);
  throw UsageError("unknown model family: " + cfg.family);
}

inline OptimizerConfig optimizer_for_family(const ExperimentConfig& cfg) {
  OptimizerConfig opt = cfg.optimizer;
  if (opt.learning_rate > 0) return opt;
  if (cfg.family == "cnn2d") {
    opt.kind = OptimizerKind::nesterov_momentum;
    opt.learning_rate = 0.002;
    opt.momentum = 0.1;
    opt.max_epochs = std::min(opt.max_epochs, 100);
  } else {
    opt.kind = OptimizerKind::adam;
    opt.learning_rate = 1e-4;
    if (cfg.family == "cnn_lstm") opt.max_epochs = std::min(opt.max_epochs, 70);
  }
  return opt;
}

// Box source for one sequence: the annotation, or the best stationary track
// from the detector. Returns nothing when detection finds no stationary car.
inline std::optional<BoundingBox> resolve_box(const IRSequence& seq,
                                              const Annotation* annotation,
                                              const ExperimentConfig& cfg) {
  if (cfg.boxes == "annotated") {
    if (!annotation) throw UsageError("no annotation for " + seq.sequence_id);
    return annotation->box;
  }
  if (cfg.boxes != "detected")
    throw UsageError("unknown box source: " + cfg.boxes);
  std::map<int, std::vector<Detection>> by_frame;
  for (std::size_t fi = 0; fi < seq.length(); ++fi) {
    auto fd = detect_cars(seq.frames[fi], cfg.detector);
    for (auto& d : fd) d.frame_index = int(fi);
    by_frame[int(fi)] = std::move(fd);
  }
  const auto cars =
      filter_stationary(build_tracks(by_frame, cfg.tracker), 36, 0.9);
  if (cars.empty()) return std::nullopt;
  const auto best = std::max_element(
      cars.begin(), cars.end(), [](const auto& a, const auto& b) {
        return a.mean_score < b.mean_score;
      });
  return best->avg_box;
}

namespace internal {

template <class T>
inline LabeledSet<T> temporal_set(
    const std::vector<const IRSequence*>& seqs,
    const std::vector<BoundingBox>& boxes, int stride, bool lstm_layout) {
  std::vector<TemporalWindow> windows;
  for (std::size_t i = 0; i < seqs.size(); ++i)
    for (int s : window_subsequences(int(seqs[i]->length()), kWindowFrames,
                                     stride))
      windows.push_back(temporal_feature(*seqs[i], boxes[i], s));

  LabeledSet<T> set;
  // cnn1d consumes [B, 1, 36]; the lstm consumes [B, 36, 1]. Same bytes.
  set.x = lstm_layout
              ? Tensor<T>({int(windows.size()), kWindowFrames, 1})
              : Tensor<T>({int(windows.size()), 1, kWindowFrames});
  for (std::size_t i = 0; i < windows.size(); ++i) {
    for (int k = 0; k < kWindowFrames; ++k)
      set.x.data[i * kWindowFrames + std::size_t(k)] =
          T(windows[i].values[std::size_t(k)]);
    set.labels.push_back(windows[i].label == EngineState::idling ? 1 : 0);
  }
  return set;
}

template <class T>
inline LabeledSet<T> stack_set(const std::vector<const IRSequence*>& seqs,
                               const std::vector<BoundingBox>& boxes,
                               int stride, const ExperimentConfig& cfg,
                               bool augmented, std::uint64_t aug_seed) {
  std::vector<SpatioTemporalStack> stacks;
  for (std::size_t i = 0; i < seqs.size(); ++i)
    for (int s : window_subsequences(int(seqs[i]->length()), kWindowFrames,
                                     stride))
      stacks.push_back(sample_stack(*seqs[i], boxes[i], s, cfg.stack_frames,
                                    cfg.stack_size));

  LabeledSet<T> set;
  set.x = Tensor<T>(
      {int(stacks.size()), cfg.stack_frames, cfg.stack_size, cfg.stack_size});
  const std::size_t sn =
      std::size_t(cfg.stack_frames) * cfg.stack_size * cfg.stack_size;
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    const SpatioTemporalStack* src = &stacks[i];
    SpatioTemporalStack aug;
    if (augmented) {
      Rng rng(Rng::derive(aug_seed, i));
      aug = augment(stacks[i], cfg.augment, rng);
      src = &aug;
    }
    std::copy_n(src->data.begin(), sn, set.x.ptr() + i * sn);
    set.labels.push_back(src->label == EngineState::idling ? 1 : 0);
  }
  return set;
}

}  // namespace internal

struct FoldSummary {
  std::string v1;
  std::string v2;
  int best_restart = -1;
  double best_v2_acc = 0.0;
  std::vector<EpochStats> history;  // winning restart
};

struct ExperimentResult {
  EvalReport report;
  std::vector<Event> predictions;
  std::vector<Event> ground_truth;
  std::vector<FoldSummary> folds;
  // Sequences with no detected stationary car (detected-box mode only).
  std::vector<std::string> undetected;
};

// Cross-validated run. Pools held-out predictions over all folds into one
// report; each held-out sequence contributes a single sequence-level event
// (or one event per subsequence when mode == "subsequence").
template <class T = float>
inline ExperimentResult run_experiment(
    const std::vector<IRSequence>& sequences,
    const std::vector<Annotation>& annotations, const ExperimentConfig& cfg) {
  std::map<std::string, const Annotation*> ann_by_id;
  for (const auto& a : annotations) ann_by_id[a.sequence_id] = &a;

  std::set<std::string> car_set;
  for (const auto& s : sequences) car_set.insert(s.car_id);
  const std::vector<std::string> cars(car_set.begin(), car_set.end());
  const FoldPlan plan = cfg.cv == "loco"
                            ? loco_folds(cars)
                            : ltco_folds(cars, Rng::derive(cfg.seed, 0xcf));

  ExperimentResult result;

  // Boxes are resolved once per sequence (shared by every fold).
  std::map<std::string, BoundingBox> box_by_id;
  for (const auto& seq : sequences) {
    const auto it = ann_by_id.find(seq.sequence_id);
    const auto box =
        resolve_box(seq, it == ann_by_id.end() ? nullptr : it->second, cfg);
    if (box)
      box_by_id[seq.sequence_id] = *box;
    else
      result.undetected.push_back(seq.sequence_id);
  }

  const bool temporal = family_is_temporal(cfg.family);
  const OptimizerConfig opt = optimizer_for_family(cfg);

  for (std::size_t fi = 0; fi < plan.folds.size(); ++fi) {
    const Fold& fold = plan.folds[fi];
    std::vector<const IRSequence*> train_seqs, v2_seqs, test_seqs;
    std::vector<BoundingBox> train_boxes, v2_boxes, test_boxes;
    for (const auto& seq : sequences) {
      const auto bit = box_by_id.find(seq.sequence_id);
      if (bit == box_by_id.end()) continue;
      if (seq.car_id == fold.v1) {
        test_seqs.push_back(&seq);
        test_boxes.push_back(bit->second);
      } else if (fold.v2 && seq.car_id == *fold.v2) {
        v2_seqs.push_back(&seq);
        v2_boxes.push_back(bit->second);
      } else {
        train_seqs.push_back(&seq);
        train_boxes.push_back(bit->second);
      }
    }
    if (train_seqs.empty()) throw TrainingError("fold has no training data");

    FoldSummary summary;
    summary.v1 = fold.v1;
    if (fold.v2) summary.v2 = *fold.v2;

    // Per-window idling probabilities for every held-out sequence.
    std::vector<std::vector<double>> window_scores(test_seqs.size());

    if (cfg.family == "svm") {
      auto train_set = internal::temporal_set<double>(train_seqs, train_boxes,
                                                      cfg.train_stride, false);
      std::vector<std::vector<double>> feats;
      std::vector<int> labels;
      for (std::size_t i = 0; i < train_set.size(); ++i) {
        feats.emplace_back(train_set.x.ptr() + i * kWindowFrames,
                           train_set.x.ptr() + (i + 1) * kWindowFrames);
        labels.push_back(train_set.labels[i] ? 1 : -1);
      }
      SvmConfig sc = cfg.svm;
      sc.seed = Rng::derive(cfg.seed, 0x500 + fi);
      const SvmModel svm = svm_train(feats, labels, sc);
      for (std::size_t ti = 0; ti < test_seqs.size(); ++ti)
        for (int s : window_subsequences(int(test_seqs[ti]->length()))) {
          const auto w =
              temporal_feature(*test_seqs[ti], test_boxes[ti], s).values;
          window_scores[ti].push_back(svm_predict_proba(
              svm, std::vector<double>(w.begin(), w.end())));
        }
    } else {
      LabeledSet<T> train_set, v2_set;
      if (temporal) {
        const bool lstm_layout = cfg.family == "lstm";
        train_set = internal::temporal_set<T>(train_seqs, train_boxes,
                                              cfg.train_stride, lstm_layout);
        v2_set = internal::temporal_set<T>(v2_seqs, v2_boxes, 1, lstm_layout);
      } else {
        train_set = internal::stack_set<T>(
            train_seqs, train_boxes, cfg.train_stride, cfg, cfg.augment_train,
            Rng::derive(cfg.seed, 0xa00 + fi));
        v2_set = internal::stack_set<T>(v2_seqs, v2_boxes, 1, cfg, false, 0);
      }

      Model<T> best_model(spec_for_family(cfg));
      double best_acc = -1.0;
      FitResult best_fit;
      for (int r = 0; r < cfg.restarts; ++r) {
        Model<T> model(spec_for_family(cfg));
        const FitResult fr =
            fit(model, train_set, v2_set, opt,
                Rng::derive(cfg.seed, 0x100 + fi * 16 + std::uint64_t(r)),
                cfg.fit_options);
        // No V2 split (leave-one-car-out): keep the lowest final loss.
        const double acc = v2_set.size()
                               ? fr.best_v2_acc
                               : 1.0 - fr.history.back().train_loss;
        if (acc > best_acc) {
          best_acc = acc;
          best_fit = fr;
          best_model.restore(model.snapshot());
          summary.best_restart = r;
        }
      }
      summary.best_v2_acc = v2_set.size() ? best_acc : 0.0;
      summary.history = best_fit.history;

      for (std::size_t ti = 0; ti < test_seqs.size(); ++ti) {
        std::vector<const IRSequence*> one{test_seqs[ti]};
        std::vector<BoundingBox> one_box{test_boxes[ti]};
        const LabeledSet<T> eval_set =
            temporal ? internal::temporal_set<T>(one, one_box, 1,
                                                 cfg.family == "lstm")
                     : internal::stack_set<T>(one, one_box, 1, cfg, false, 0);
        for (std::size_t at = 0; at < eval_set.size();) {
          const std::size_t bn = std::min(
              std::size_t(cfg.fit_options.eval_batch), eval_set.size() - at);
          std::vector<std::size_t> idx(bn);
          std::iota(idx.begin(), idx.end(), at);
          const auto p = best_model.predict_proba(eval_set.subset(idx).x);
          window_scores[ti].insert(window_scores[ti].end(), p.begin(), p.end());
          at += bn;
        }
      }
    }

    for (std::size_t ti = 0; ti < test_seqs.size(); ++ti) {
      const IRSequence& seq = *test_seqs[ti];
      const auto starts = window_subsequences(int(seq.length()));
      if (cfg.mode == "subsequence") {
        for (std::size_t wi = 0; wi < starts.size(); ++wi) {
          Event e;
          e.box = test_boxes[ti];
          e.start = starts[wi];
          e.end = starts[wi] + kWindowFrames - 1;
          e.score = window_scores[ti][wi];
          e.view = seq.view;
          result.predictions.push_back(e);
          if (seq.engine_state == EngineState::idling) {
            Event g = e;
            g.score = 1.0;
            const auto ait = ann_by_id.find(seq.sequence_id);
            if (ait != ann_by_id.end()) g.box = ait->second->box;
            result.ground_truth.push_back(g);
          }
        }
      } else {
        Event e;
        e.box = test_boxes[ti];
        e.start = 0;
        e.end = int(seq.length()) - 1;
        e.score = sequence_score(window_scores[ti]);
        e.view = seq.view;
        result.predictions.push_back(e);
        if (seq.engine_state == EngineState::idling) {
          Event g = e;
          g.score = 1.0;
          const auto ait = ann_by_id.find(seq.sequence_id);
          if (ait != ann_by_id.end()) g.box = ait->second->box;
          result.ground_truth.push_back(g);
        }
      }
    }
    result.folds.push_back(std::move(summary));
  }

  // Ground truth for sequences with no usable box still counts as a miss.
  for (const auto& id : result.undetected) {
    const auto it =
        std::find_if(sequences.begin(), sequences.end(),
                     [&](const IRSequence& s) { return s.sequence_id == id; });
    if (it == sequences.end() || it->engine_state != EngineState::idling)
      continue;
    Event g;
    const auto ait = ann_by_id.find(id);
    if (ait != ann_by_id.end()) g.box = ait->second->box;
    g.start = 0;
    g.end = int(it->length()) - 1;
    g.score = 1.0;
    g.view = it->view;
    result.ground_truth.push_back(g);
  }

  result.report = make_report(result.predictions, result.ground_truth,
                              cfg.mode, cfg.boxes);
  return result;
}

}  // namespace ivd
